from pydantic_settings import BaseSettings, SettingsConfigDict
import os

class Config(BaseSettings):
    app_name: str = 'DEBI-NN optimizer comparison'
    out_dir: str = 'runs'
    database_name: str = 'runs.sqlite3'
    data_dir: str = 'data'
    workers: int = 1
    log_level: str = 'INFO'
    max_sweep_runs: int = 10000

    model_config = SettingsConfigDict(
        env_file=f"{os.getcwd()}/.env",
        env_prefix='DEBINN_',
        extra='ignore'
    )
