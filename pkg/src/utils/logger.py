import logging
import sys

from src.utils.config import Config

LEVELS = {
    'DEBUG': logging.DEBUG,
    'INFO': logging.INFO,
    'WARNING': logging.WARNING,
    'ERROR': logging.ERROR,
}


class Logger:
    """
    Singleton wrapper around the 'debinn' logger.

    Records go to stderr as '<iso timestamp> [LEVEL] [context] message' so stdout only carries
    the JSON command responses. The threshold comes from Config.log_level.

    Methods:
        log(level, message):
            Logs a message; level is one of 'DEBUG', 'INFO', 'WARNING', 'ERROR' and anything
            else is logged as INFO. Messages usually start with a bracketed context such as
            '[train] [GA] [seed=0]'.
    """
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super(Logger, cls).__new__(cls)
            cls._instance._configure()
        return cls._instance

    def _configure(self):
        self.logger = logging.getLogger('debinn')
        self.logger.setLevel(LEVELS.get(Config().log_level.upper(), logging.INFO))

        if not self.logger.handlers:
            handler = logging.StreamHandler(sys.stderr)
            handler.setFormatter(logging.Formatter('%(asctime)s [%(levelname)s] %(message)s'))
            self.logger.addHandler(handler)

    def log(self, level: str, message: str):
        self.logger.log(LEVELS.get(level, logging.INFO), message)
