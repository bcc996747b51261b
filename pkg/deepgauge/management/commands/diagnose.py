# -*- coding: utf-8 -*-
import logging

import numpy as np
import pandas as pd

from deepgauge.cli import ConfiguredCommand, load_model
from deepgauge.diagnostics import (
    adf_diagnostic, return_level_coverage, scaled_cloud, slice_validation_points, truncgamma_qq, validity_summary,
)
from deepgauge.exceptions import DomainError
from deepgauge.forms import DiagnoseForm
from deepgauge.geometry import bivariate_slice, decompose, normalize
from deepgauge.inference import estimate_adf
from deepgauge.margins import MarginTag
from deepgauge.utils import read_dataset, write_frame

log = logging.getLogger(__name__)


class Command(ConfiguredCommand):
    help = "Write goodness-of-fit diagnostics and plotting series of a fitted model as CSV."
    form_class = DiagnoseForm

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--model", help="bundle written by the fit command")
        parser.add_argument("--data", help="Laplace-margin dataset")
        parser.add_argument("--output")
        parser.add_argument("--what", help="qq, adf, coverage, slice, points, cloud or validity")
        parser.add_argument("--angle", help='ADF direction, e.g. "1,1,1"')
        parser.add_argument("--q", type=float)
        parser.add_argument("--p-grid", dest="p_grid", help='e.g. "0.9,0.99,0.999"')
        parser.add_argument("--pair", help='1-based coordinates of a slice, e.g. "1,2"')
        parser.add_argument("--epsilon", type=float)
        parser.add_argument("--grid", type=int, help="points on a slice")
        parser.add_argument("--simulations", type=int, help="simulations behind QQ envelopes, 0 for none")
        parser.add_argument("--seed", type=int)

    def run(self, cleaned):
        """
        Compute the requested diagnostic and write it to --output
        :param cleaned: validated DiagnoseForm data
        :return: a one-line summary
        """
        model = load_model(cleaned["model"])[0] if cleaned.get("model") else None
        data = self.load_data(cleaned["data"]) if cleaned.get("data") else None
        frame, summary = getattr(self, f"diagnose_{cleaned['what']}")(cleaned, model, data)
        write_frame(cleaned["output"], frame)
        return summary

    def load_data(self, path):
        data, _ = read_dataset(path)
        if data.margin is not MarginTag.LAPLACE:
            raise DomainError(f"{path} must be on Laplace margins")
        return data

    def diagnose_qq(self, cleaned, model, data):
        series = truncgamma_qq(decompose(data), model, cleaned["simulations"], cleaned["seed"])
        return series.to_frame(), f"ks={series.ks_statistic():.6g}"

    def diagnose_adf(self, cleaned, model, data):
        w = normalize(np.asarray(cleaned["angle"], dtype=float))
        if w.shape[0] != model.d:
            raise DomainError(f"--angle needs {model.d} components")
        lambda_hat = estimate_adf(model, model.reference_angles, w).lambda_hat
        series = adf_diagnostic(data, w, lambda_hat, cleaned["q"], cleaned["simulations"], cleaned["seed"])
        summary = f"lambda_hat={lambda_hat:.6g} exceedances={series.observed.size}"
        return series.to_frame(), f"{summary} warning={series.warning}" if series.warning else summary

    def diagnose_coverage(self, cleaned, model, data):
        frame = return_level_coverage(data, model, cleaned["p_grid"])
        inside = (frame["y"] >= frame["y_lower"]) & (frame["y"] <= frame["y_upper"])
        return frame, f"inside_band={int(inside.sum())}/{len(frame)}"

    def diagnose_slice(self, cleaned, model, data):
        i, j = self.pair(cleaned, model.d)
        points = bivariate_slice(model.gauge, i, j, cleaned["grid"], model.d)
        return pd.DataFrame(points, columns=[f"x{i + 1}", f"x{j + 1}"]), f"points={len(points)}"

    def diagnose_points(self, cleaned, model, data):
        i, j = self.pair(cleaned, data.d)
        points = slice_validation_points(data, i, j, cleaned["epsilon"])
        return pd.DataFrame(points, columns=[f"x{i + 1}", f"x{j + 1}"]), f"points={len(points)}"

    def diagnose_cloud(self, cleaned, model, data):
        return pd.DataFrame(scaled_cloud(data), columns=list(data.columns)), f"points={data.n}"

    def diagnose_validity(self, cleaned, model, data):
        report = validity_summary(model, seed=cleaned["seed"])
        frame = pd.DataFrame({
            "coordinate": np.arange(1, model.d + 1),
            "upper": report["upper"],
            "lower": report["lower"],
        })
        summary = (f"valid={report['valid']} contained={report['contained']} touches={report['touches']} "
                   f"bound_violations={report['bound_violations']} "
                   f"min_gauge_minus_sup_norm={report['min_bound_gap']:.3g}")
        return frame, summary

    def pair(self, cleaned, d):
        i, j = (index - 1 for index in cleaned["pair"])
        if max(i, j) >= d:
            raise DomainError(f"--pair coordinates must lie in 1..{d}")
        return i, j
