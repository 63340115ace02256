"""
Sample file generator configuration
"""

# Samples to generate: (case, gamma, n, seed)
SAMPLES = [
    ('i', 0.0, 1000, 1),
    ('i', 2.0, 1000, 1),
    ('i', 4.0, 1000, 1),
    ('ii', 4.0, 1000, 2),
    ('iv', 0.0, 1000, 3),
    ('iv', 4.0, 1000, 3),
    ('v', 4.0, 1000, 4),
    ('contig', 1.0, 10000, 5),
]

# Location of the contiguous case
CONTIG_MU = 1.0

# Output settings
OUTPUT_CONFIG = {
    'sample_dir': '../data/samples',
    'manifest': 'manifest.csv',
    'log_dir': 'logs',
    'log_file': 'generate_samples.log'
}

# Log level
LOG_LEVEL = 'INFO'  # DEBUG, INFO, WARNING, ERROR, CRITICAL
