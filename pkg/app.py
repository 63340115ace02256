"""
mixtest - Homogeneity tests for Gaussian mixtures

Command-line entry point for the likelihood ratio test and the split
likelihood ratio test (universal inference), their Monte Carlo size/power
experiments and null-distribution diagnostics.

Usage:
    python app.py thresholds --n 1000
    python app.py test data/samples/casei_g0_n1000_s1.txt --method slrt --m0 0.5
    python app.py simulate --case i --n 1000 --reps 1000 --seed 7 --compare
"""

import sys

from src.cli import main


if __name__ == "__main__":
    sys.exit(main())
