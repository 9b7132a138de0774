from utils.config import load_config, save_config
from utils.logger import setup_logger

__all__ = ['load_config', 'save_config', 'setup_logger']
