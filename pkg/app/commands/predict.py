import logging

import click
from flask import Blueprint

from app.corpus import read_tokens, write_predictions
from app.model.network import SemiCRFModel, predict_timed
from app.utils import exits_on_error, require_file

logger = logging.getLogger(__name__)

bp = Blueprint("predict", __name__, cli_group=None)


@bp.cli.command("predict")
@click.option("--model", "model_path", required=True, help="Checkpoint written by train.")
@click.option("--input", "input_path", required=True, help="Sequences to segment, in the model's task format.")
@click.option("--output", "output_path", required=True, help="Where the predictions go.")
@exits_on_error
def cmd_predict(model_path, input_path, output_path):
    """Segment a file; the output mirrors the gold-data format of the model's task."""
    model = SemiCRFModel.load(model_path)
    task = model.config.task
    sequences = read_tokens(require_file(input_path, what="input"), task, model.config.normalize_width)

    predictions, speed = predict_timed(model, sequences)
    if sequences:
        logger.info("segmented %d sequences at %.2f tokens/ms", len(sequences), speed)
    write_predictions(output_path, task, sequences, predictions)
    click.echo(f"sequences\t{len(sequences)}")
