import dataclasses
import logging
import os

import click
from flask import Blueprint, current_app

from app.config import model_config, resolve_settings, train_config
from app.corpus import parse_corpus, segment_oov_rate, split_dev
from app.model import trainer
from app.model.network import SemiCRFModel
from app.utils import exits_on_error, require_file, save_json

logger = logging.getLogger(__name__)

bp = Blueprint("train", __name__, cli_group=None)

CHECKPOINT_FILE = "model.npz"
CONFIG_FILE = "config.json"
LOG_FILE = "train.log"


@bp.cli.command("train")
@click.option("--config", "config_path", default=None, help="TOML file with MODEL_*/TRAIN_* keys.")
@click.option("--train", "train_path", required=True, help="Training corpus.")
@click.option("--dev", "dev_path", default=None, help="Dev corpus; defaults to the last 10% of --train.")
@click.option("--out", "out_dir", required=True, help="Directory for model.npz, config.json and train.log.")
@exits_on_error
def cmd_train(config_path, train_path, dev_path, out_dir):
    """Train a segmenter and keep the parameters of the best dev epoch."""
    settings = resolve_settings(current_app.config, config_path)
    mc = model_config(settings)
    tc = train_config(settings)
    mc.check_files()

    train_data = parse_corpus(require_file(train_path, what="training corpus"), mc.task, mc.normalize_width)
    if dev_path:
        dev_data = parse_corpus(require_file(dev_path, what="dev corpus"), mc.task, mc.normalize_width)
    else:
        train_data, dev_data = split_dev(train_data)
        logger.info("no dev corpus given, holding out the last %d sequences", len(dev_data))
    logger.info("%d training and %d dev sequences", len(train_data), len(dev_data))
    logger.info("segment OOV rate on dev: %.4f", segment_oov_rate(train_data, dev_data, mc.key_separator))

    os.makedirs(out_dir, exist_ok=True)
    save_json(os.path.join(out_dir, CONFIG_FILE), {
        "model": mc.to_dict(),
        "train": dataclasses.asdict(tc),
    })

    model = SemiCRFModel.from_corpus(mc, train_data)
    result = trainer.train(
        model, train_data, dev_data, tc,
        log_path=os.path.join(out_dir, LOG_FILE),
        checkpoint_path=os.path.join(out_dir, CHECKPOINT_FILE),
    )
    click.echo(f"best_epoch\t{result.best_epoch}")
    click.echo(f"dev_f\t{result.best_f:.4f}")
