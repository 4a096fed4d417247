from typing import List, Optional, Set

from peewee import DoesNotExist, SqliteDatabase, chunked

from src.database.models.runs import CurvesModel, RunsModel
from src.schemas.records import CurveRow, RunRecord

class RunsRepository:
    """
    Repository class for the run store of a sweep.

    Attributes:
        db (SqliteDatabase): The initialized database of the sweep directory.
        model (RunsModel): The model representing the runs table.
        curves (CurvesModel): The model representing the curves table.

    Methods:
        get_run_ids():
            Returns the ids of every stored run, used to resume a sweep.
        get_run(run_id: str):
            Returns the RunRecord of one run, or None if it is not stored.
        get_runs(dataset: str = None, optimizer: str = None, status: str = None):
            Returns the stored runs matching the filters, in grid order.
        create(record: RunRecord):
            Stores a run and its curve rows in one transaction.
    """
    def __init__(self, db: SqliteDatabase):
        self.db = db
        self.model = RunsModel
        self.curves = CurvesModel

    def get_run_ids(self) -> Set[str]:
        return {row['run_id'] for row in self.model.select(self.model.run_id).dicts()}

    def get_run(self, run_id: str) -> Optional[RunRecord]:
        try:
            row = self.model.select().where(self.model.run_id == run_id).dicts().get()
        except DoesNotExist:
            return None
        return self._to_record(row)

    def get_runs(self, dataset: str = None, optimizer: str = None, status: str = None) -> List[RunRecord]:
        query = self.model.select()
        if dataset is not None:
            query = query.where(self.model.dataset == dataset)
        if optimizer is not None:
            query = query.where(self.model.optimizer == optimizer)
        if status is not None:
            query = query.where(self.model.status == status)
        query = query.order_by(self.model.grid_index, self.model.seed, self.model.id)
        return [self._to_record(row) for row in query.dicts()]

    def create(self, record: RunRecord) -> RunRecord:
        with self.db.atomic():
            self.model.create(
                run_id=record.run_id,
                grid_index=record.grid_index,
                dataset=record.dataset,
                optimizer=record.optimizer,
                seed=record.seed,
                status=record.status.value,
                config=record.config,
                train_metrics=record.train_metrics.model_dump() if record.train_metrics else None,
                test_metrics=record.test_metrics.model_dump() if record.test_metrics else None,
                duration_seconds=record.duration_seconds,
                error=record.error,
                run_dir=record.run_dir,
            )
            rows = [{'run': record.run_id, **row.model_dump()} for row in record.curves]
            for batch in chunked(rows, 200):
                self.curves.insert_many(batch).execute()
        return record

    def _to_record(self, row: dict) -> RunRecord:
        curves = (
            self.curves.select()
            .where(self.curves.run == row['run_id'])
            .order_by(self.curves.epoch)
            .dicts()
        )
        return RunRecord(
            run_id=row['run_id'],
            grid_index=row['grid_index'],
            dataset=row['dataset'],
            optimizer=row['optimizer'],
            seed=row['seed'],
            config=row['config'],
            status=row['status'],
            train_metrics=row['train_metrics'],
            test_metrics=row['test_metrics'],
            curves=[CurveRow(**{key: curve[key] for key in CurveRow.model_fields}) for curve in curves],
            duration_seconds=row['duration_seconds'],
            error=row['error'],
            run_dir=row['run_dir'],
        )
