# -*- coding: utf-8 -*-
import logging

from deepgauge.cli import ConfiguredCommand
from deepgauge.forms import TransformForm
from deepgauge.margins import convert
from deepgauge.utils import read_dataset, write_dataset

log = logging.getLogger(__name__)


class Command(ConfiguredCommand):
    help = "Convert a dataset between margin scales; raw data are rank transformed."
    form_class = TransformForm

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--input")
        parser.add_argument("--output")
        parser.add_argument("--source", help="margin tag of the input, overrides its sidecar")
        parser.add_argument("--target", help="uniform, exponential or laplace")

    def run(self, cleaned):
        data, sidecar = read_dataset(cleaned["input"], cleaned.get("source") or None)
        converted = convert(data, cleaned["target"])
        provenance = {key: value for key, value in sidecar.items() if key not in ("margin", "n", "d", "version")}
        provenance["transformed_from"] = data.margin.value
        write_dataset(cleaned["output"], converted, provenance)
        return cleaned["output"]
