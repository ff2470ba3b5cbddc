"""
Logging configuration for the MCM motion synthesis lab
"""

import logging
import logging.handlers
import os
import time
from functools import wraps
from typing import Any, Dict, Optional

from ..config import LOG_LEVEL, LOG_FORMAT, LOG_DATE_FORMAT, LOGS_DIR

# component logger name -> (file name, level)
COMPONENT_LOGGERS = {
    "numerics": ("numerics.log", logging.DEBUG),
    "motion_pipeline": ("motion_pipeline.log", logging.DEBUG),
    "training": ("training.log", logging.DEBUG),
    "sampling": ("sampling.log", logging.DEBUG),
    "metrics": ("metrics.log", logging.DEBUG),
    "pipeline": ("pipeline.log", logging.INFO),
    "performance": ("performance.log", logging.DEBUG),
}


def setup_logging():
    """Configure logging for the entire application"""

    detailed_formatter = logging.Formatter(fmt=LOG_FORMAT, datefmt=LOG_DATE_FORMAT)
    simple_formatter = logging.Formatter(
        fmt="%(asctime)s - %(levelname)s - %(message)s",
        datefmt="%H:%M:%S"
    )

    root_logger = logging.getLogger()
    level = getattr(logging, LOG_LEVEL.upper(), logging.INFO)
    root_logger.setLevel(level)

    # Clear existing handlers
    root_logger.handlers.clear()

    # Console handler (always available)
    console_handler = logging.StreamHandler()
    console_handler.setLevel(max(level, logging.INFO))
    console_handler.setFormatter(simple_formatter)
    root_logger.addHandler(console_handler)

    # File handler for all logs (with permission error handling)
    file_logging = True
    try:
        os.makedirs(LOGS_DIR, exist_ok=True)
        main_log = os.path.join(LOGS_DIR, "mcm.log")
        with open(main_log, "a"):
            pass

        file_handler = logging.handlers.RotatingFileHandler(
            filename=main_log,
            maxBytes=10 * 1024 * 1024,  # 10MB
            backupCount=5,
            encoding="utf-8"
        )
        file_handler.setLevel(level)
        file_handler.setFormatter(detailed_formatter)
        root_logger.addHandler(file_handler)
    except (PermissionError, OSError) as e:
        file_logging = False
        root_logger.warning(f"⚠️ Cannot write to log file ({e}), using console logging only")

    setup_component_loggers(detailed_formatter, file_logging)

    logger = logging.getLogger(__name__)
    logger.debug("🚀 Logging system initialized")
    logger.debug(f"📊 Log level: {LOG_LEVEL}")
    logger.debug(f"📁 Logs directory: {LOGS_DIR}")


def setup_component_loggers(formatter, file_logging: bool = True):
    """Setup specialized loggers for the numerics, training, sampling and metrics components"""

    for name, (file_name, level) in COMPONENT_LOGGERS.items():
        component_logger = logging.getLogger(name)
        component_logger.setLevel(level)
        for handler in list(component_logger.handlers):
            component_logger.removeHandler(handler)
            handler.close()

        if not file_logging:
            continue
        try:
            handler = logging.handlers.RotatingFileHandler(
                filename=os.path.join(LOGS_DIR, file_name),
                maxBytes=5 * 1024 * 1024,  # 5MB
                backupCount=3,
                encoding="utf-8"
            )
        except (PermissionError, OSError):
            # component keeps propagating to the console handler
            continue
        handler.setFormatter(formatter)
        component_logger.addHandler(handler)


def get_logger(name: str) -> logging.Logger:
    """Get a logger instance for a specific component"""
    return logging.getLogger(name)


def log_performance(logger_name: Optional[str] = None):
    """Decorator to log function performance"""
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            logger = logging.getLogger(logger_name or func.__module__)
            perf_logger = logging.getLogger("performance")
            start_time = time.time()

            logger.debug(f"🚀 Starting {func.__name__} with args={len(args)}, kwargs={list(kwargs.keys())}")

            try:
                result = func(*args, **kwargs)
            except Exception as e:
                duration = time.time() - start_time
                logger.error(f"❌ {func.__name__} failed after {duration:.3f}s: {str(e)}")
                perf_logger.error(f"{func.__name__} failed in {duration:.3f}s: {str(e)}", extra={
                    "operation": func.__name__,
                    "duration": duration,
                    "status": "error",
                    "error": str(e)
                })
                raise

            duration = time.time() - start_time
            logger.info(f"✅ {func.__name__} completed in {duration:.3f}s")
            perf_logger.info(f"{func.__name__} completed in {duration:.3f}s", extra={
                "operation": func.__name__,
                "duration": duration,
                "status": "success"
            })
            return result
        return wrapper
    return decorator


def log_error_with_context(logger: logging.Logger, error: Exception, context: Dict[str, Any]):
    """Log error with additional context information."""
    logger.error(
        f"💥 Error occurred: {str(error)}",
        extra={
            "error_type": type(error).__name__,
            "error_message": str(error),
            "context": context
        },
        exc_info=True
    )


# Module-level loggers that can be imported directly
numerics_logger = logging.getLogger("numerics")
motion_logger = logging.getLogger("motion_pipeline")
training_logger = logging.getLogger("training")
sampling_logger = logging.getLogger("sampling")
metrics_logger = logging.getLogger("metrics")
pipeline_logger = logging.getLogger("pipeline")
performance_logger = logging.getLogger("performance")

# Ensure setup_logging is called when module is imported
try:
    setup_logging()
except Exception:
    # Fallback to basic logging if setup fails
    logging.basicConfig(level=logging.INFO)
