# -*- coding: utf-8 -*-
import logging

import numpy as np
import pandas as pd

from deepgauge.cli import ConfiguredCommand, load_model, read_points
from deepgauge.exceptions import DomainError, ExtrapolationError
from deepgauge.forms import InferForm
from deepgauge.inference import estimate_adf_many, return_level_radius, tail_probability
from deepgauge.margins import MarginTag
from deepgauge.utils import file_digest, read_dataset, write_frame

log = logging.getLogger(__name__)

OK = "ok"
ZERO_NORM = "zero_norm"
ZERO_COMPONENT = "zero_component"
EXTRAPOLATION = "extrapolation"
DOMAIN = "domain"


def _select(rows, mask):
    return [row for row, keep in zip(rows, mask) if keep]


class Command(ConfiguredCommand):
    help = "Evaluate a fitted model on a batch of queries: extended ADF, joint tail probabilities or return levels."
    form_class = InferForm

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--model", help="bundle written by the fit command")
        parser.add_argument("--queries", help="CSV with one angle or point per row")
        parser.add_argument("--output")
        parser.add_argument("--what", help="adf, probability or return_level")
        parser.add_argument("--data", help="Laplace-margin dataset, needed for probabilities")
        parser.add_argument("--q", type=float, help="level of the min-projection threshold")
        parser.add_argument("--p", type=float, help="return-level probability")

    def run(self, cleaned):
        """
        Answer every query row; a row that cannot be answered gets an error
        code in its status column and the run continues.
        :param cleaned: validated InferForm data
        :return: number of rows answered
        """
        model, _ = load_model(cleaned["model"])
        queries = read_points(cleaned["queries"], model.d)
        digest = file_digest(cleaned["model"])
        rows = [self.provenance(cleaned, digest, k, x) for k, x in enumerate(queries)]
        norms = np.linalg.norm(queries, axis=1)
        usable = norms > 0
        for row in _select(rows, ~usable):
            row.update(status=ZERO_NORM, message="query has zero norm")
        angles = np.zeros_like(queries)
        angles[usable] = queries[usable] / norms[usable, None]
        for row, w in zip(rows, angles):
            row.update({f"w{i + 1}": value for i, value in enumerate(w)})

        what = cleaned["what"]
        if what == "return_level":
            radii = return_level_radius(model, angles[usable], cleaned["p"]) if usable.any() else []
            for row, radius in zip(_select(rows, usable), radii):
                row.update(status=OK, p=cleaned["p"], radius=float(radius))
        else:
            self.answer_adf(model, rows, angles, usable, cleaned)

        frame = pd.DataFrame(rows)
        write_frame(cleaned["output"], frame)
        answered = int((frame["status"] == OK).sum())
        if answered < len(rows):
            log.warning(f"{len(rows) - answered} of {len(rows)} queries could not be answered")
        return str(answered)

    def answer_adf(self, model, rows, angles, usable, cleaned):
        zero_free = usable & np.all(angles != 0, axis=1)
        for row in _select(rows, usable & ~zero_free):
            row.update(status=ZERO_COMPONENT, message="the extended ADF needs an angle without zero components")
        if not zero_free.any():
            return
        estimates = estimate_adf_many(model, model.reference_angles, angles[zero_free])
        data = None
        if cleaned["what"] == "probability":
            data, _ = read_dataset(cleaned["data"])
            if data.margin is not MarginTag.LAPLACE:
                raise DomainError(f"{cleaned['data']} must be on Laplace margins")
        for row, estimate in zip(_select(rows, zero_free), estimates):
            row.update(lambda_hat=estimate.lambda_hat, r_tilde=estimate.r_tilde)
            if data is None:
                row.update(status=OK)
                continue
            x = np.array([row[f"x{i + 1}"] for i in range(model.d)])
            try:
                result = tail_probability(x, data, model, q=cleaned["q"], lambda_hat=estimate.lambda_hat)
            except ExtrapolationError as exc:
                row.update(status=EXTRAPOLATION, message=str(exc))
                continue
            except DomainError as exc:
                row.update(status=DOMAIN, message=str(exc))
                continue
            row.update(status=OK, q=cleaned["q"], u=result.u, probability=result.probability)

    def provenance(self, cleaned, digest, k, x):
        row = {"query": k, "model": cleaned["model"], "model_sha256": digest,
               "what": cleaned["what"], "status": "", "message": ""}
        row.update({f"x{i + 1}": value for i, value in enumerate(x)})
        return row
