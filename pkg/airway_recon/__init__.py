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

"""Airway geometry reconstruction from anatomic-OCT pull-back scans."""

__version__ = "1.0.0"
