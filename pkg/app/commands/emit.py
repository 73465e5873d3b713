import click
from flask import Blueprint

from app.model.embeddings import emit_segmented_corpus
from app.model.network import SemiCRFModel
from app.utils import exits_on_error, require_file

bp = Blueprint("emit", __name__, cli_group=None)


@bp.cli.command("emit-segmented")
@click.option("--model", "model_path", required=True, help="Checkpoint written by train.")
@click.option("--raw", "raw_path", required=True, help="Unsegmented text, one sequence per line.")
@click.option("--out", "out_path", required=True, help="Segmented corpus for embedding training.")
@click.option("--separator", default=None, help="Joins the units of a segment; defaults to the model's.")
@exits_on_error
def cmd_emit_segmented(model_path, raw_path, out_path, separator):
    """Auto-segment raw text into the input of an embedding trainer."""
    model = SemiCRFModel.load(model_path)
    require_file(raw_path, what="raw corpus")
    if separator is None:
        separator = model.separator
    written = emit_segmented_corpus(model, raw_path, out_path, separator,
                                    char_level=model.config.task == "wordseg")
    click.echo(f"segments\t{written}")
