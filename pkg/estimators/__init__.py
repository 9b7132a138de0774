from estimators.base_estimator import BaseEstimator, BaseForecaster, measurement_values
from estimators.forecasters import (
    FnnForecaster,
    RnnForecaster,
    Var1Forecaster,
    build_forecaster,
    load_forecaster,
)
from estimators.monitor import MonitorResult, StateMonitor
from estimators.network_estimators import FnnEstimator, ProxNetEstimator, load_estimator
from estimators.solver_estimators import GaussNewtonEstimator, ProxLinearEstimator
