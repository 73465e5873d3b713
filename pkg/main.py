from flask.cli import FlaskGroup

from app import create_app

cli = FlaskGroup(
    help="Neural semi-Markov CRF segmenter: train, predict, eval, emit-segmented, oov, report.",
    create_app=create_app,
    add_default_commands=False,
    add_version_option=False,
    load_dotenv=False,
    set_debug_flag=False,
)

if __name__ == "__main__":
    cli()
