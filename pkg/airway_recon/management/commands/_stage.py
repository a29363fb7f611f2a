# Airway OCT Reconstruction - 3D airway geometry from anatomic OCT pull-backs.
# Copyright (C) 2025 Pramit Sharma
#
# This file is part of airway_recon.
#
# airway_recon is free software: you can redistribute it and/or modify
# it under the terms of the GNU Affero General Public License as published by
# the Free Software Foundation, either version 3 of the License, or (at your
# option) any later version.
#
# airway_recon is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Affero General Public License for more details.
#
# You should have received a copy of the GNU Affero General Public License
# along with this program.  If not, see <https://www.gnu.org/licenses/>.

from django.core.management.base import BaseCommand, CommandError

from airway_recon.exceptions import AoctError
from airway_recon.pipeline.config import PipelineConfig, load_config
from airway_recon.pipeline.stages import run_stage


class StageCommand(BaseCommand):
    """Shared `--config/--seed/--out` handling; subclasses name their stage."""

    stage = ""

    def add_arguments(self, parser):
        parser.add_argument("--config", required=True, help="Pipeline TOML file")
        parser.add_argument("--seed", type=int, default=None, help="Override the config seed")
        parser.add_argument("--out", default=None, help="Override the output directory")

    def load(self, options) -> PipelineConfig:
        try:
            cfg = load_config(options["config"])
        except AoctError as e:
            raise CommandError(str(e)) from e
        return cfg.with_overrides(seed=options["seed"], out=options["out"])

    def handle(self, *args, **options):
        cfg = self.load(options)
        self.stdout.write(f"Running stage '{self.stage}' into {cfg.out_dir}")
        try:
            record = run_stage(self.stage, cfg)
        except AoctError as e:
            self.stderr.write(self.style.ERROR(f"Stage '{self.stage}' failed: {e}"))
            raise CommandError(str(e)) from e
        for warning in record.warnings[:5]:
            self.stdout.write(self.style.WARNING(warning))
        self.stdout.write(
            self.style.SUCCESS(
                f"Stage '{self.stage}' complete: {len(record.outputs)} files in {record.wall_clock_s:.1f} s"
            )
        )
