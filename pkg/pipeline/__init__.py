from .executor import execute, resolve_out_dir
from .export import ArtifactWriter, format_float, load_series_dir, read_series
from .plot_data import emit_plot_data
from .rejudge import RejudgeResult, rejudge_run
from .run_config import RunConfig, load_run_config, validate
from .stages import StageRegistry, StageSpec
