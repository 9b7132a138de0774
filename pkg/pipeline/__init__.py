from pipeline.dataset import (
    Dataset,
    NoiseConfig,
    generate_dataset,
    load_dataset,
    save_dataset,
    split_dataset,
)
from pipeline.loads import LoadSeries, ingest_load_csv, scale_loads, synth_load_series, write_load_csv
from pipeline.metrics import polar_errors, rmse, rmse_per_sample, summarize
