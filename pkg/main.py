import json
import logging
import sys
from typing import Optional

import click

from app.handlers.ablation import AblationGrid, ablation_handler
from app.handlers.dataset import dataset_handler
from app.handlers.evaluation import evaluation_handler
from app.handlers.export import export_handler
from app.handlers.sampling import sampling_handler
from app.handlers.training import training_handler
from app.models.experiment import PROTOCOLS, ExperimentConfig
from app.network.checkpoint import load_checkpoint
from app.utils.errors import DataError, MotionLabError, NumericError, ShapeError
from app.utils.logging import log_error_with_context, setup_logging

# Initialize logging system
setup_logging()
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


def _config(path: Optional[str]) -> ExperimentConfig:
    return ExperimentConfig.from_yaml(path) if path else ExperimentConfig()


config_option = click.option("--config", "config_path", type=click.Path(dir_okay=False),
                             help="Experiment YAML file (defaults apply when omitted)")


@click.group()
def cli():
    """Multi-condition motion synthesis: data, training, sampling, evaluation"""


@cli.command("gen-data")
@config_option
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Dataset file to write")
@click.option("--seed", type=int, default=None, help="Overrides seeds.data")
def gen_data(config_path, out, seed):
    """Generate the procedural (motion, text, audio) dataset"""
    config = _config(config_path)
    dataset = dataset_handler.generate(config, seed)
    dataset_handler.save(out, dataset, config)
    click.echo(out)


@cli.command("train-main")
@config_option
@click.option("--data", "data_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def train_main(config_path, data_path, out_dir):
    """Text stage: train the main branch"""
    dataset, _ = dataset_handler.load(data_path)
    result = training_handler.train_main(_config(config_path), dataset, out_dir)
    click.echo(result.checkpoint_path)


@cli.command("train-control")
@config_option
@click.option("--data", "data_path", required=True, type=click.Path(dir_okay=False))
@click.option("--main-ckpt", required=True, type=click.Path(dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def train_control(config_path, data_path, main_ckpt, out_dir):
    """Control stage: freeze the main branch, train the control branch and bridges"""
    dataset, _ = dataset_handler.load(data_path)
    result = training_handler.train_control(_config(config_path), dataset, main_ckpt, out_dir)
    click.echo(result.checkpoint_path)


@cli.command("finetune-single")
@config_option
@click.option("--data", "data_path", required=True, type=click.Path(dir_okay=False))
@click.option("--main-ckpt", required=True, type=click.Path(dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def finetune_single(config_path, data_path, main_ckpt, out_dir):
    """Baseline: finetune the main branch itself on audio-conditioned data"""
    dataset, _ = dataset_handler.load(data_path)
    result = training_handler.finetune_single(_config(config_path), dataset, main_ckpt, out_dir)
    click.echo(result.checkpoint_path)


@cli.command("sample")
@click.option("--checkpoint", required=True, type=click.Path(dir_okay=False))
@click.option("--text", required=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Motion file to write")
@click.option("--audio", "audio_path", type=click.Path(dir_okay=False), help="Columnar audio feature file")
@click.option("--frames", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--positions", "positions_path", type=click.Path(dir_okay=False), help="Also write JSON positions")
def sample(checkpoint, text, out, audio_path, frames, seed, positions_path):
    """Sample a motion under text, optionally with audio"""
    result = sampling_handler.sample_cmd(checkpoint, text, out, audio_path=audio_path, frames=frames, seed=seed,
                                         positions_path=positions_path)
    click.echo(json.dumps(result.to_dict()))


@cli.command("evaluate")
@config_option
@click.option("--data", "data_path", required=True, type=click.Path(dir_okay=False))
@click.option("--checkpoint", type=click.Path(dir_okay=False), default=None)
@click.option("--protocol", type=click.Choice(PROTOCOLS), default=None)
@click.option("--out", "out_prefix", required=True, help="Report path prefix (.json and .txt are appended)")
def evaluate(config_path, data_path, checkpoint, protocol, out_prefix):
    """Compute the metrics report"""
    dataset, _ = dataset_handler.load(data_path)
    ckpt = load_checkpoint(checkpoint) if checkpoint else None
    report = evaluation_handler.evaluate_cmd(_config(config_path), dataset, ckpt, protocol, out_prefix)
    click.echo(report.to_key_values(), nl=False)


@cli.command("ablate")
@click.option("--grid", "grid_path", required=True, type=click.Path(dir_okay=False))
@click.option("--data", "data_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def ablate(grid_path, data_path, out_dir):
    """Train every grid entry with the same step counts and tabulate the results"""
    grid = AblationGrid.from_yaml(grid_path)
    dataset, _ = dataset_handler.load(data_path)
    rows = ablation_handler.ablation_cmd(grid, dataset, out_dir)
    click.echo(f"{len(rows)} rows written to {out_dir}")


@cli.command("export")
@click.option("--motion", "motion_path", required=True, type=click.Path(dir_okay=False))
@click.option("--json", "json_path", type=click.Path(dir_okay=False), default=None)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None)
def export(motion_path, json_path, csv_path):
    """Export a motion file as JSON joint positions and/or CSV features"""
    written = export_handler.export(motion_path, json_path, csv_path)
    click.echo(json.dumps(written))


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, NumericError):
        return EXIT_NUMERIC
    if isinstance(error, (DataError, ShapeError)):
        return EXIT_DATA
    return EXIT_USAGE


def run(argv=None) -> int:
    """Invoke the CLI and map failures onto exit codes"""
    try:
        result = cli.main(args=argv, prog_name="mcm", standalone_mode=False)
    except (click.ClickException, click.exceptions.Abort) as e:
        if isinstance(e, click.ClickException):
            e.show()
        return EXIT_USAGE
    except MotionLabError as e:
        log_error_with_context(logger, e, {"argv": argv if argv is not None else sys.argv[1:]})
        click.echo(f"error: {e}", err=True)
        return exit_code_for(e)
    return result if isinstance(result, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(run())
