"""Named parameter presets for the two production titles.

These are the tuned values shipped with the system: seasonal orders for
the dynamic-regression models and the boosting/network hyperparameters,
keyed by ``<game>_<target>``.
"""

from .arima import ArimaOrder
from .dbn import DbnParams
from .gbm import GbmParams

__all__ = ["ARIMA_PRESETS", "GBM_PRESETS", "DBN_PRESETS"]

ARIMA_PRESETS: dict[str, ArimaOrder] = {
    "aoi_sales": ArimaOrder(p=2, d=1, q=1, P=1, D=1, Q=1, m=7),
    "gs_sales": ArimaOrder(p=2, d=1, q=1, P=1, D=0, Q=1, m=7),
    "aoi_playtime": ArimaOrder(p=2, d=1, q=2, P=1, D=1, Q=1, m=7),
    "gs_playtime": ArimaOrder(p=1, d=1, q=1, P=1, D=1, Q=1, m=7),
}

GBM_PRESETS: dict[str, GbmParams] = {
    "aoi_sales": GbmParams(max_depth=100, eta=0.20),
    "gs_sales": GbmParams(max_depth=1, eta=0.76),
    "aoi_playtime": GbmParams(max_depth=1, eta=0.66),
    "gs_playtime": GbmParams(max_depth=1000, eta=0.23),
}

DBN_PRESETS: dict[str, DbnParams] = {
    "aoi_sales": DbnParams(h=2, n=50, plr=0.0001, tlr=0.01, k=5, b=50),
    "gs_sales": DbnParams(h=2, n=300, plr=0.001, tlr=0.1, k=2, b=10),
    "aoi_playtime": DbnParams(h=2, n=50, plr=0.0001, tlr=0.01, k=2, b=50),
    "gs_playtime": DbnParams(h=2, n=300, plr=0.0001, tlr=0.1, k=2, b=50),
}
