# -*- coding: utf-8 -*-
import logging

from deepgauge.bootstrap import RefitTask, bootstrap_replicates, summarize
from deepgauge.cli import ConfiguredCommand, add_training_arguments, read_points
from deepgauge.exceptions import DomainError
from deepgauge.forms import BootstrapForm
from deepgauge.margins import MarginTag
from deepgauge.utils import read_dataset, write_frame

log = logging.getLogger(__name__)


class Command(ConfiguredCommand):
    help = "Block-bootstrap uncertainty of the extended ADF at the diagonal, eta and joint tail probabilities."
    form_class = BootstrapForm

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--data", help="Laplace-margin dataset in time order")
        parser.add_argument("--output", help="per-replicate CSV; percentiles go to <output>.summary.csv")
        parser.add_argument("--block-length", dest="block_length", type=int)
        parser.add_argument("--replicates", type=int)
        parser.add_argument("--queries", help="CSV of points whose joint tail probability is bootstrapped")
        parser.add_argument("--q", type=float)
        parser.add_argument("--processes", type=int)
        add_training_arguments(parser)

    def run(self, cleaned):
        data, _ = read_dataset(cleaned["data"])
        if data.margin is not MarginTag.LAPLACE:
            raise DomainError(f"{cleaned['data']} must be on Laplace margins")
        queries = read_points(cleaned["queries"], data.d) if cleaned.get("queries") else ()
        task = RefitTask(cleaned["tau"], cleaned["threshold_arch"], cleaned["gauge_arch"], cleaned["train_config"],
                         cleaned["reference_size"], cleaned["reference_seed"],
                         tuple(tuple(x) for x in queries), cleaned["q"])
        frame = bootstrap_replicates(data, cleaned["plan"], cleaned["replicates"], task, cleaned.get("processes"))
        write_frame(cleaned["output"], frame)
        table = summarize(frame)
        table.insert(0, "percentile", table.index)
        write_frame(f"{cleaned['output']}.summary.csv", table)
        return str(len(frame))
