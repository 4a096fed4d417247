import os

from peewee import SqliteDatabase, Model

from src.utils.config import Config

settings = Config()

class DatabaseConnection:
    """
    Singleton class to manage the run store connection.
    The SQLite database is deferred: it lives inside each sweep output directory,
    so it is only bound to a file when `initialize` is called with that directory.
    Methods
    -------
    initialize(out_dir):
        Binds the database to <out_dir>/<Config.database_name> and creates the tables.
    connect():
        Opens the database connection if it is closed.
    close():
        Closes the database connection if it is open.
    get_db():
        Returns the database instance.
    """
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super(DatabaseConnection, cls).__new__(cls)
            cls._instance._initialize_connection()
        return cls._instance

    def _initialize_connection(self):
        self.db = SqliteDatabase(None)
        self.path = None

    def initialize(self, out_dir: str):
        path = os.path.join(out_dir, settings.database_name)
        if self.path == path and not self.db.is_closed():
            return self.db
        self.close()
        os.makedirs(out_dir, exist_ok=True)
        self.db.init(path, pragmas={'journal_mode': 'wal', 'foreign_keys': 1})
        self.path = path
        self.connect()

        from src.database.models.runs import CurvesModel, RunsModel
        self.db.create_tables([RunsModel, CurvesModel], safe=True)
        return self.db

    def connect(self):
        if self.db.is_closed():
            self.db.connect()

    def close(self):
        if not self.db.is_closed():
            self.db.close()

    def get_db(self):
        return self.db

database = DatabaseConnection().get_db()

class SqliteModel(Model):
    class Meta:
        database = database
