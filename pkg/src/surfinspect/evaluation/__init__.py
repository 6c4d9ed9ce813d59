from .bench import RUNS, SCOPE, LatencyReport, benchmark_inference
from .evaluate import CrossValReport, crossvalidate, evaluate, kfold_split, predict_split
from .metrics import ConfusionMatrix, MetricsReport, compute_metrics, mean_report, ratio
