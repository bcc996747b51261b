# -*- coding: utf-8 -*-
import logging

import pandas as pd

from deepgauge.cli import ConfiguredCommand, add_training_arguments
from deepgauge.forms import StudyForm
from deepgauge.study import StudyGrid, run_study
from deepgauge.utils import write_frame

log = logging.getLogger(__name__)


class Command(ConfiguredCommand):
    help = "Run a simulation study grid and tabulate ISE and MALE percentiles per cell."
    form_class = StudyForm

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--label", help="study label in the run ledger")
        parser.add_argument("--output", help="per-cell summary CSV")
        parser.add_argument("--copulas", help='e.g. "gaussian,student_t,logistic"')
        parser.add_argument("--dims", help='e.g. "2,3,5"')
        parser.add_argument("--ns", help='e.g. "10000,100000"')
        parser.add_argument("--taus", help='e.g. "0.5,0.75,0.9"')
        parser.add_argument("--archs", help='e.g. "64,64,64;32,32"')
        parser.add_argument("--replicates", type=int)
        parser.add_argument("--corr-seed", dest="corr_seed", type=int)
        parser.add_argument("--corr-dmax", dest="corr_dmax", type=int)
        parser.add_argument("--nu", type=float)
        parser.add_argument("--theta", type=float)
        parser.add_argument("--q", type=float)
        parser.add_argument("--processes", type=int)
        add_training_arguments(parser)

    def run(self, cleaned):
        grid = StudyGrid(
            copulas=cleaned["copulas"], dims=cleaned["dims"], ns=cleaned["ns"], taus=cleaned["taus"],
            archs=cleaned["archs"], replicates=cleaned["replicates"], seed=cleaned["seed"],
            threshold_arch=cleaned["threshold_arch"], train_config=cleaned["train_config"],
            reference_size=cleaned["reference_size"], reference_seed=cleaned["reference_seed"],
            corr_seed=cleaned["corr_seed"], corr_dmax=cleaned["corr_dmax"], nu=cleaned["nu"],
            theta=cleaned["theta"], q=cleaned["q"],
        )
        rows = run_study(grid, cleaned["label"], cleaned["processes"])
        write_frame(cleaned["output"], pd.DataFrame(rows))
        return str(len(rows))
