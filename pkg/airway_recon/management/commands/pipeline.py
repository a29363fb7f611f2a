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

from django.core.management.base import CommandError

from airway_recon.exceptions import AoctError
from airway_recon.management.commands._stage import StageCommand
from airway_recon.pipeline.stages import run_pipeline


class Command(StageCommand):
    help = "Run every configured stage in order: simulate, extract, fit, mesh, resample, metrics"
    stage = "pipeline"

    def handle(self, *args, **options):
        cfg = self.load(options)
        self.stdout.write(f"Running stages {', '.join(cfg.stages)} into {cfg.out_dir}")
        try:
            records = run_pipeline(cfg)
        except AoctError as e:
            self.stderr.write(self.style.ERROR(f"Pipeline failed: {e}"))
            raise CommandError(str(e)) from e
        for record in records:
            self.stdout.write(
                self.style.SUCCESS(f"  {record.stage}: {len(record.outputs)} files, {record.wall_clock_s:.1f} s")
            )
        self.stdout.write(self.style.SUCCESS(f"Pipeline complete; manifest at {cfg.out_dir / 'manifest.json'}"))
