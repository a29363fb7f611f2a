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

from django.db import models


class StageRun(models.Model):
    """One execution of a pipeline stage; the JSON manifest stays the source of truth."""

    class StatusChoices(models.TextChoices):
        RUNNING = "Running"
        COMPLETE = "Complete"
        FAILED = "Failed"

    run_id = models.CharField(max_length=64)
    stage = models.CharField(max_length=16)
    status = models.CharField(
        max_length=10,
        choices=StatusChoices.choices,
        default=StatusChoices.RUNNING,
    )
    output_dir = models.CharField(max_length=1024)
    manifest_delta = models.TextField(null=True, blank=True)  # JSON, or error message
    created_at = models.DateTimeField(auto_now_add=True)
    completed_at = models.DateTimeField(null=True, blank=True)

    class Meta:
        indexes = [
            models.Index(fields=["run_id", "stage"], name="stage_run_lookup_idx"),
        ]

    def __str__(self):
        return f"{self.run_id}:{self.stage} ({self.status})"
