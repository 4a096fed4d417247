from typing import Optional, Sequence

import click

from src.cli.common import EXIT_USAGE
from src.cli.router import commands
from src.database.connection import DatabaseConnection
from src.utils.config import Config

settings = Config()


@click.group(help=settings.app_name)
def app():
    pass


for command in commands:
    app.add_command(command)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the command line and return its exit code: 0 ok, 1 usage error, 2 run failure."""
    try:
        result = app.main(args=list(argv) if argv is not None else None, prog_name='debinn', standalone_mode=False)
    except click.ClickException as error:
        error.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        return EXIT_USAGE
    finally:
        DatabaseConnection().close()
    return result if isinstance(result, int) else 0
