# -*- coding: utf-8 -*-
import logging

from deepgauge.cli import ConfiguredCommand
from deepgauge.copulas import sample
from deepgauge.forms import SimulateForm
from deepgauge.utils import write_dataset

log = logging.getLogger(__name__)


class Command(ConfiguredCommand):
    help = "Simulate a dataset on Laplace margins from a Gaussian, Student-t or logistic copula."
    form_class = SimulateForm

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--kind", help="gaussian, student_t or logistic")
        parser.add_argument("--dim", type=int)
        parser.add_argument("--n", type=int)
        parser.add_argument("--seed", type=int)
        parser.add_argument("--rho", type=float, help="equicorrelation when no --corr-seed is given")
        parser.add_argument("--corr-seed", dest="corr_seed", type=int)
        parser.add_argument("--corr-dmax", dest="corr_dmax", type=int)
        parser.add_argument("--nu", type=float)
        parser.add_argument("--theta", type=float)
        parser.add_argument("--output")

    def run(self, cleaned):
        """
        Write the n x d sample with a sidecar recording the copula and the seed
        :param cleaned: validated SimulateForm data
        :return: path of the written dataset
        """
        spec = cleaned["spec"]
        data = sample(spec, cleaned["n"], cleaned["seed"])
        write_dataset(cleaned["output"], data, {"copula": spec.to_dict(), "seed": cleaned["seed"]})
        return cleaned["output"]
