import click
from flask import Blueprint

from app.config import TASKS
from app.corpus import detect_task, parse_corpus, segment_oov_rate
from app.utils import exits_on_error, require_file

bp = Blueprint("oov", __name__, cli_group=None)


@bp.cli.command("oov")
@click.option("--train", "train_path", required=True)
@click.option("--dev", "dev_path", required=True)
@click.option("--task", type=click.Choice(TASKS), default=None, help="Skip format detection.")
@click.option("--normalize-width", is_flag=True, help="Map full-width digits and letters to ASCII.")
@exits_on_error
def cmd_oov(train_path, dev_path, task, normalize_width):
    """Share of dev gold segments that never occur in the training data."""
    require_file(train_path, what="training corpus")
    require_file(dev_path, what="dev corpus")
    task = task or detect_task(train_path)
    train = parse_corpus(train_path, task, normalize_width)
    dev = parse_corpus(dev_path, task, normalize_width)
    click.echo(f"oov_rate\t{segment_oov_rate(train, dev):.4f}")
