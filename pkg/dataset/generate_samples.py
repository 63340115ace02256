#!/usr/bin/env python3
"""
Sample file generator

Draws samples from the simulation scenarios and writes them as text files
with one value per line, the input format of `app.py test`.
"""

import logging
import os
import sys
from datetime import datetime
from pathlib import Path
from typing import Dict, List

import pandas as pd
from tqdm import tqdm

import config

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.model import AlternativeScenario, CaseId, resolve_scenario, sample  # noqa: E402


class SampleFileGenerator:
    """Writes scenario samples and a manifest describing them"""

    def __init__(self):
        self._setup_logging()
        self.sample_dir = Path(config.OUTPUT_CONFIG['sample_dir'])
        self.sample_dir.mkdir(parents=True, exist_ok=True)
        self.records: List[Dict[str, object]] = []
        self.logger.info(f"Sample generator initialized: {self.sample_dir}")

    def _setup_logging(self):
        log_dir = config.OUTPUT_CONFIG['log_dir']
        os.makedirs(log_dir, exist_ok=True)
        log_file = os.path.join(log_dir, config.OUTPUT_CONFIG['log_file'])

        logging.basicConfig(
            level=getattr(logging, config.LOG_LEVEL),
            format='[%(asctime)s] %(levelname)s - %(message)s',
            handlers=[
                logging.FileHandler(log_file, encoding='utf-8'),
                logging.StreamHandler(sys.stdout)
            ]
        )
        self.logger = logging.getLogger(__name__)

    def generate(self, case: str, gamma: float, n: int, seed: int) -> Path:
        """Draw one sample and write it; the file name encodes the scenario."""
        scenario = AlternativeScenario(case_id=CaseId(case), gamma=gamma, n=n, mu=config.CONTIG_MU)
        params = resolve_scenario(scenario)
        data = sample(scenario, seed)

        path = self.sample_dir / f"case{case}_g{gamma:g}_n{n}_s{seed}.txt"
        # repr keeps every bit, so the CLI reads back the exact sample
        path.write_text("\n".join(repr(float(v)) for v in data.values) + "\n", encoding="utf-8")

        self.records.append({
            'file': path.name,
            'case': case,
            'gamma': gamma,
            'n': n,
            'seed': seed,
            'params': repr(params),
            'shifted': int(data.indicators.sum()),
        })
        return path

    def run(self):
        self.logger.info("=" * 60)
        self.logger.info("Sample generation started")
        self.logger.info("=" * 60)
        start = datetime.now()

        try:
            for case, gamma, n, seed in tqdm(config.SAMPLES, desc="samples"):
                path = self.generate(case, gamma, n, seed)
                self.logger.info(f"Wrote {path}")

            manifest = self.sample_dir / config.OUTPUT_CONFIG['manifest']
            pd.DataFrame(self.records).to_csv(manifest, index=False)

            elapsed = (datetime.now() - start).total_seconds()
            self.logger.info("=" * 60)
            self.logger.info(f"Generated {len(self.records)} samples in {elapsed:.2f}s")
            self.logger.info(f"Manifest: {manifest}")
            self.logger.info("=" * 60)

        except Exception as e:
            self.logger.error(f"Sample generation failed: {e}", exc_info=True)
            raise


def main():
    """Entry point"""
    generator = SampleFileGenerator()
    generator.run()


if __name__ == '__main__':
    main()
