from peewee import CharField, FloatField, ForeignKeyField, IntegerField, TextField
from datetime import datetime

from src.database.connection import SqliteModel
from src.database.models.fields import JSONField

class RunsModel(SqliteModel):
    """
    RunsModel represents one (optimizer, configuration, seed) run of a sweep.
    Attributes:
        run_id (CharField): Stable identifier derived from the config snapshot and the seed.
        grid_index (IntegerField): Position of the configuration in the sweep grid.
        dataset (CharField), optimizer (CharField): Grouping keys of the report.
        seed (IntegerField): Seed of the run.
        status (CharField): ok, diverged or failed.
        config (JSONField): Configuration snapshot.
        train_metrics, test_metrics (JSONField): Final metrics, NULL unless the run succeeded.
        duration_seconds (FloatField): Wall-clock training time.
        error (TextField): Error message of failed and diverged runs.
        run_dir (CharField): Directory with the run artifacts.
        created_at (CharField): ISO timestamp of the insertion.
    Meta:
        table_name (str): Specifies the name of the database table as 'runs'.
    """
    run_id = CharField(max_length=16, unique=True)
    grid_index = IntegerField(null=False)
    dataset = CharField(max_length=255, null=False)
    optimizer = CharField(max_length=8, null=False)
    seed = IntegerField(null=False)
    status = CharField(max_length=16, null=False)
    config = JSONField(null=False)
    train_metrics = JSONField(null=True)
    test_metrics = JSONField(null=True)
    duration_seconds = FloatField(default=0.0)
    error = TextField(null=True)
    run_dir = CharField(max_length=1024, null=True)
    created_at = CharField(max_length=32, default=lambda: datetime.now().isoformat(timespec="seconds"))

    class Meta:
        table_name = 'runs'

class CurvesModel(SqliteModel):
    """
    CurvesModel holds one epoch (GD) or generation (GA) row of a run's training curve.
    Meta:
        table_name (str): Specifies the name of the database table as 'curves'.
        indexes: (run, epoch) is unique.
    """
    run = ForeignKeyField(RunsModel, field='run_id', backref='curves', on_delete='CASCADE')
    epoch = IntegerField(null=False)
    phase = CharField(max_length=8, null=True)
    loss = FloatField(null=False)
    mean_loss = FloatField(null=True)
    train_bacc = FloatField(null=True)
    test_bacc = FloatField(null=True)

    class Meta:
        table_name = 'curves'
        indexes = ((('run', 'epoch'), True),)
