"""Benchmark harness: data ingestion, model persistence, pipelines, CLI."""
from .io import (ingest_csv, load_models, model_document, parse_document, read_columns,
                 save_models, write_csv)
from .pipeline import BenchmarkConfig, PipelineResult, evaluate_models, rmse_table, run_pipeline
from .spectrum import Spectrum, export_spectrum
