import logging
import os
from datetime import datetime

from dotenv import load_dotenv

# .env 파일은 로그 설정(LINGREG_LOG_LEVEL, LINGREG_LOG_DIR)에만 사용합니다.
load_dotenv()

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(log_dir: str | None = None, level: str | None = None):
    """
    Configures the root logger with a console handler (standard error) and,
    when a log directory is given, a timestamped file handler.

    Args:
        log_dir (str | None): Directory for the log file. None keeps logging on the console only.
        level (str | None): Log level name. Falls back to LINGREG_LOG_LEVEL, then INFO.
    """
    log_dir = log_dir or os.getenv("LINGREG_LOG_DIR") or None
    level_name = (level or os.getenv("LINGREG_LOG_LEVEL") or "INFO").upper()

    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, level_name, logging.INFO))

    # 핸들러가 중복으로 추가되는 것을 방지하기 위해 기존 핸들러 제거
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    formatter = logging.Formatter(LOG_FORMAT)

    console_handler = logging.StreamHandler()
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    log_filename = None
    if log_dir:
        os.makedirs(log_dir, exist_ok=True)
        # 매 실행마다 고유한 로그 파일 이름 ('년월일_시분초')
        log_filename = datetime.now().strftime(f"{log_dir}/regularity_%Y%m%d_%H%M%S.log")
        file_handler = logging.FileHandler(log_filename, encoding='utf-8')
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)

    logging.getLogger('concurrent').setLevel(logging.WARNING)
    logging.getLogger('asyncio').setLevel(logging.WARNING)

    logger = logging.getLogger(__name__)
    if log_filename:
        logger.debug(f"Logging to file '{log_filename}' started.")
    return log_filename
