import logging

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from application.use_cases.experiments import CONFIG_ERRORS, EXIT_CONFIG, EXIT_NUMERICAL, RunExperimentUseCase
from domain.exceptions import CatflowError, ConfigValidationError
from infrastructure.plotting import SvgPlotRenderer
from infrastructure.repositories import FileArtifactRepository
from interfaces.config import parse_config
from interfaces.serializers import EXPERIMENTS

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = "Run one cat-qubit experiment and write its artifacts"
    requires_system_checks = []

    def add_arguments(self, parser):
        parser.add_argument("experiment", choices=EXPERIMENTS)
        parser.add_argument("--config", required=True, help="Path to a JSON run config")
        parser.add_argument("--set", action="append", default=[], dest="overrides", metavar="KEY=VALUE")
        parser.add_argument("--out", default=None, help="Output directory (overrides the config)")
        parser.add_argument("--workers", type=int, default=settings.CATFLOW_WORKERS)

    def _fail(self, out_dir, error, code):
        logger.error(f"{error.kind}: {error.message}")
        FileArtifactRepository(out_dir).write_json("failure.json", error.to_dict())
        self.stderr.write(self.style.ERROR(error.message))
        for message in getattr(error, "errors", []):
            self.stderr.write(f"  {message}")
        raise CommandError(error.message, returncode=code)

    def handle(self, *args, **options):
        experiment = options["experiment"]
        fallback_dir = options["out"] or f"{settings.CATFLOW_OUTPUT_DIR}/{experiment}"

        try:
            with open(options["config"], "r", encoding="utf-8") as f:
                text = f.read()
        except OSError as exc:
            self._fail(fallback_dir, ConfigValidationError([f"cannot read {options['config']}: {exc}"]), EXIT_CONFIG)

        try:
            config = parse_config(text, [f"experiment={experiment}"] + options["overrides"], options["out"])
        except CatflowError as exc:
            self._fail(fallback_dir, exc, EXIT_CONFIG if isinstance(exc, CONFIG_ERRORS) else EXIT_NUMERICAL)

        self.stdout.write(f"Running {experiment} -> {config.output_dir}")
        repository = FileArtifactRepository(config.output_dir)
        use_case = RunExperimentUseCase(
            repository,
            SvgPlotRenderer(),
            workers=options["workers"],
            rank_threshold=settings.CATFLOW_RANK_THRESHOLD,
            oracle_max_dim=settings.CATFLOW_ORACLE_MAX_DIM,
        )
        status = use_case.execute(config)
        if status:
            raise CommandError(f"{experiment} failed, see {repository.path('failure.json')}", returncode=status)
        self.stdout.write(self.style.SUCCESS(f"{experiment} finished, artifacts in {config.output_dir}"))
