from .dataset import DatasetSpec, generate_dataset, generate_item, write_dataset
from .report import report_from_json, report_to_json, write_report
from .runner import BenchmarkReport, SuiteSpec, load_suite, run_suite, suite_from_dict

__all__ = [
    "BenchmarkReport",
    "DatasetSpec",
    "SuiteSpec",
    "generate_dataset",
    "generate_item",
    "load_suite",
    "report_from_json",
    "report_to_json",
    "run_suite",
    "suite_from_dict",
    "write_dataset",
    "write_report",
]
