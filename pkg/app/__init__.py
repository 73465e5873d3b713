from flask import Flask

from app.config import ENV_PREFIX, default_settings


def create_app(test_config=None):
    app = Flask(__name__)
    app.config.from_mapping(default_settings())
    app.config.from_prefixed_env(ENV_PREFIX)
    if test_config is not None:
        app.config.from_mapping(test_config)

    # module loggers live under "app" and propagate here
    app.logger.setLevel(app.config["LOG_LEVEL"])

    from .commands.train import bp as train_bp
    from .commands.predict import bp as predict_bp
    from .commands.evaluate import bp as evaluate_bp
    from .commands.emit import bp as emit_bp
    from .commands.oov import bp as oov_bp
    from .commands.report import bp as report_bp

    # Register command blueprints
    app.register_blueprint(train_bp)
    app.register_blueprint(predict_bp)
    app.register_blueprint(evaluate_bp)
    app.register_blueprint(emit_bp)
    app.register_blueprint(oov_bp)
    app.register_blueprint(report_bp)

    return app
