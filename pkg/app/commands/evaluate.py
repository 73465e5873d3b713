import click
from flask import Blueprint

from app.config import TASKS
from app.corpus import detect_task, f_score, parse_corpus
from app.errors import ValidationError
from app.utils import exits_on_error, require_file

bp = Blueprint("evaluate", __name__, cli_group=None)


@bp.cli.command("eval")
@click.option("--gold", "gold_path", required=True, help="Reference corpus.")
@click.option("--pred", "pred_path", required=True, help="Predictions in the same format.")
@click.option("--task", type=click.Choice(TASKS), default=None, help="Skip format detection.")
@exits_on_error
def cmd_eval(gold_path, pred_path, task):
    """Segment-level precision, recall and F."""
    require_file(gold_path, what="gold file")
    require_file(pred_path, what="prediction file")
    task = task or detect_task(gold_path)

    gold = parse_corpus(gold_path, task)
    pred = parse_corpus(pred_path, task)
    if len(gold) != len(pred):
        raise ValidationError(f"{gold_path} has {len(gold)} sequences, {pred_path} has {len(pred)}")
    for k, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise ValidationError(f"sequence {k}: {len(g)} gold tokens but {len(p)} predicted")

    scores = f_score(gold, pred.segmentations())
    click.echo(f"precision\t{scores.precision:.4f}")
    click.echo(f"recall\t{scores.recall:.4f}")
    click.echo(f"F\t{scores.f:.4f}")
