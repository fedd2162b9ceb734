import logging
import logging.handlers
from pathlib import Path

from config import settings

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class LoggerSetup:
    """Setup logging for the MNL bandit laboratory"""

    def __init__(self, log_dir: str = settings.LOG_DIR, file_logging: bool = settings.ENABLE_FILE_LOGGING):
        self.log_dir = Path(log_dir)
        self.file_logging = file_logging
        if self.file_logging:
            self.log_dir.mkdir(parents=True, exist_ok=True)

        self.level = getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO)

        # Create loggers
        self.setup_logger('main', 'main.log', self.level)
        self.setup_logger('validation', 'validation.log', self.level)
        self.setup_logger('experiment', 'experiment.log', self.level)
        self.setup_logger('error', 'error.log', logging.ERROR)

    def setup_logger(self, name: str, filename: str, level: int):
        """Attach a rotating file handler and a console handler to a named logger"""
        logger = logging.getLogger(name)
        logger.setLevel(level)

        # Prevent duplicate handlers
        if logger.handlers:
            return

        formatter = logging.Formatter(LOG_FORMAT)

        if self.file_logging:
            file_handler = logging.handlers.RotatingFileHandler(
                self.log_dir / filename,
                maxBytes=10*1024*1024,  # 10MB
                backupCount=5
            )
            file_handler.setLevel(level)
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)

        # Console only shows warnings; round traces would flood it
        console_handler = logging.StreamHandler()
        console_handler.setLevel(max(level, logging.WARNING))
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

# Global logger instances
logger_setup = LoggerSetup()

def get_main_logger():
    """Get main application logger"""
    return logging.getLogger('main')

def get_validation_logger():
    """Get validation logger"""
    return logging.getLogger('validation')

def get_experiment_logger():
    """Get experiment logger"""
    return logging.getLogger('experiment')

def get_error_logger():
    """Get error logger"""
    return logging.getLogger('error')

# Convenience functions for logging
def log_validation_event(event_type: str, subject: str, details: str, level: str = "INFO"):
    """Log validation events"""
    logger = get_validation_logger()
    message = f"VALIDATION_{event_type.upper()} - {subject}: {details}"

    if level.upper() == "ERROR":
        logger.error(message)
    elif level.upper() == "WARNING":
        logger.warning(message)
    else:
        logger.info(message)

def log_experiment_event(action: str, details: str = ""):
    """Log experiment progress events"""
    logger = get_experiment_logger()
    message = f"EXPERIMENT - {action}"
    if details:
        message += f" - {details}"
    logger.info(message)

def log_round(agent_id: str, t: int, phase: str, details: str = ""):
    """Log a single bandit round (debug level)"""
    logger = get_main_logger()
    if not logger.isEnabledFor(logging.DEBUG):
        return
    message = f"ROUND - {agent_id} - t={t} - {phase}"
    if details:
        message += f" - {details}"
    logger.debug(message)

def log_error(error_type: str, message: str, exception: Exception = None):
    """Log errors and exceptions"""
    logger = get_error_logger()
    error_msg = f"ERROR_{error_type.upper()} - {message}"
    if exception:
        error_msg += f" - Exception: {str(exception)}"
    logger.error(error_msg)
