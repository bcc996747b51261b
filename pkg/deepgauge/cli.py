# -*- coding: utf-8 -*-
"""
Shared plumbing of the management commands: config-file merging, schema
validation through the command's form, logging verbosity and the mapping of
failures to exit codes.
"""
import logging

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from deepgauge.exceptions import DeepGaugeError, DomainError, NumericalFailure, TwoStageError
from deepgauge.gauge import GaugeModel
from deepgauge.utils import read_json, read_table, write_json

log = logging.getLogger(__name__)

EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class ConfiguredCommand(BaseCommand):
    """
    Base class for commands whose options are validated by ``form_class``.

    Options may be given in a JSON file passed with ``--config``; any flag
    given on the command line overrides the file.
    """
    form_class = None

    def add_arguments(self, parser):
        parser.add_argument("--config", help="JSON file with option values")

    def handle(self, *args, **options):
        if options.get("verbosity", 1) >= 3:
            logging.getLogger("deepgauge").setLevel(logging.DEBUG)
        payload = self.merge(options)
        form = self.form_class(data=payload)
        if not form.is_valid():
            raise CommandError(form.errors.as_text(), returncode=EXIT_CONFIG)
        output = form.cleaned_data.get("output")
        try:
            result = self.run(form.cleaned_data)
        except NumericalFailure as exc:
            if output:
                dump = f"{output}.failure.json"
                write_json(dump, {"error": str(exc), "state": exc.state})
            raise CommandError(str(exc), returncode=EXIT_NUMERIC)
        except (DeepGaugeError, ValidationError) as exc:
            raise CommandError(str(exc), returncode=EXIT_CONFIG)
        except OSError as exc:
            raise CommandError(str(exc), returncode=EXIT_IO)
        if result:
            self.stdout.write(str(result))

    def merge(self, options):
        payload = {}
        if options.get("config"):
            try:
                payload.update(read_json(options["config"]))
            except (OSError, ValueError) as exc:
                raise CommandError(f"cannot read config {options['config']}: {exc}", returncode=EXIT_CONFIG)
        fields = self.form_class.base_fields
        for key, value in options.items():
            if key in fields and value is not None:
                payload[key] = value
        return payload

    def run(self, cleaned):
        raise NotImplementedError


def add_training_arguments(parser):
    parser.add_argument("--tau", type=float)
    parser.add_argument("--threshold-arch", dest="threshold_arch", help='e.g. "32,32,32"')
    parser.add_argument("--gauge-arch", dest="gauge_arch", help='e.g. "64,64,64"')
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch-size", dest="batch_size", type=int)
    parser.add_argument("--patience", type=int)
    parser.add_argument("--learning-rate", dest="learning_rate", type=float)
    parser.add_argument("--l1", type=float)
    parser.add_argument("--l2", type=float)
    parser.add_argument("--validation-fraction", dest="validation_fraction", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--penalize-biases", dest="penalize_biases", action="store_true", default=None)
    parser.add_argument("--no-penalize-biases", dest="penalize_biases", action="store_false")
    parser.add_argument("--refresh-size", dest="refresh_size", type=int)
    parser.add_argument("--refresh-every", dest="refresh_every", type=int)
    parser.add_argument("--reference-size", dest="reference_size", type=int)
    parser.add_argument("--reference-seed", dest="reference_seed", type=int)


def load_model(path):
    """
    Read a model bundle written by the fit command
    :param path: JSON bundle path
    :return: (GaugeModel, bundle dict)
    """
    bundle = read_json(path)
    if "model" not in bundle:
        raise TwoStageError(f"{path} holds no fitted gauge model (stage {bundle.get('stage', 'unknown')})")
    try:
        model = GaugeModel.from_dict(bundle["model"])
    except DeepGaugeError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"{path} is not a valid model bundle: {exc!r}") from exc
    return model, bundle


def read_points(path, d=None):
    """Query rows of a CSV file as an (m, d) array."""
    _, values = read_table(path)
    if d is not None and values.shape[1] != d:
        raise DomainError(f"{path} has {values.shape[1]} columns, the model has d={d}")
    return values
