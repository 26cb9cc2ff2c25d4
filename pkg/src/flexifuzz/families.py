"""Model families selectable from the command line and the benchmark harness.

All five families are trained with the same weighted LSSVM; they differ
only in how memberships are produced and which hyperparameters are tuned.
"""

from dataclasses import dataclass

from .classifier import TrainConfig
from .kernel_linalg import KernelSpec
from .membership import CenterEstimator, MembershipConfig, Scheme

#: Fixed delta of the linear center-based membership.
CENTER_LIN_DELTA = 1e-6


@dataclass(frozen=True, order=True)
class GridPoint:
    C: float
    sigma: float
    lam: float = None
    k: int = None
    gamma: float = None

    def sort_key(self):
        return (self.C, self.sigma, self.lam or 0, self.k or 0, self.gamma or 0)

    def to_dict(self):
        out = {"C": self.C, "sigma": self.sigma}
        if self.lam is not None:
            out["lambda"] = self.lam
        if self.k is not None:
            out["k"] = self.k
        if self.gamma is not None:
            out["gamma"] = self.gamma
        return out


@dataclass(frozen=True)
class Family:
    name: str
    label: str
    scheme: Scheme
    center: CenterEstimator
    axes: tuple

    def membership_config(self, point):
        kwargs = {"scheme": self.scheme, "center": self.center, "delta": CENTER_LIN_DELTA}
        if point.lam is not None:
            kwargs["lam"] = point.lam
        if point.k is not None:
            kwargs["k"] = point.k
        if point.gamma is not None:
            kwargs["gamma"] = point.gamma
        return MembershipConfig(**kwargs)

    def train_config(self, point):
        return TrainConfig(C=point.C, kernel=KernelSpec(point.sigma),
                           membership=self.membership_config(point))


FAMILIES = {
    f.name: f
    for f in (
        Family("lssvm", "LSSVM", Scheme.UNIFORM, CenterEstimator.MEAN, ("C", "sigma")),
        Family("fsvm-lin", "FSVM-Lin (LSSVM)", Scheme.CENTER_LIN, CenterEstimator.MEAN, ("C", "sigma")),
        Family("fsvm-exp", "FSVM-Exp (LSSVM)", Scheme.CENTER_EXP, CenterEstimator.MEAN,
               ("C", "sigma", "gamma")),
        Family("flexi1", "Flexi-Fuzz-LSSVM-I", Scheme.FLEXI_FUZZ, CenterEstimator.MEAN,
               ("C", "sigma", "lambda", "k")),
        Family("flexi2", "Flexi-Fuzz-LSSVM-II", Scheme.FLEXI_FUZZ, CenterEstimator.MEDIAN,
               ("C", "sigma", "lambda", "k")),
    )
}


def get_family(name):
    try:
        return FAMILIES[name]
    except KeyError:
        raise ValueError(f"unknown model family {name!r}; choose from {', '.join(FAMILIES)}") from None
