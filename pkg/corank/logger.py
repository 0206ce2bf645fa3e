import logging
import logging.handlers
import os

LOG_FILE_NAME = 'corank.log'
LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'
# 200kb * 5 files = 1mb of logs
LOG_MAX_BYTES = 200000
LOG_BACKUP_COUNT = 5

_OWNED = '_corank_handler'


class Logger:
    @staticmethod
    def setup_logging(logger, location, level=logging.INFO):
        """Log to the console and to a rotating file under ``<location>/logs``.

        Handlers attached by an earlier call on the same logger are replaced.
        """
        log_path = os.path.join(location, 'logs')
        if not os.path.exists(log_path):
            os.makedirs(log_path)

        Logger.remove_handlers(logger)
        logger.setLevel(level)
        formatter = logging.Formatter(LOG_FORMAT)
        file_handler = logging.handlers.RotatingFileHandler(
            os.path.join(log_path, LOG_FILE_NAME),
            maxBytes=LOG_MAX_BYTES,
            backupCount=LOG_BACKUP_COUNT,
            encoding='utf-8',
        )
        for handler in (logging.StreamHandler(), file_handler):
            handler.setFormatter(formatter)
            setattr(handler, _OWNED, True)
            logger.addHandler(handler)

    @staticmethod
    def remove_handlers(logger):
        for handler in [handler for handler in logger.handlers if getattr(handler, _OWNED, False)]:
            logger.removeHandler(handler)
            handler.close()
