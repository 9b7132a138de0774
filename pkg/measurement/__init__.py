from measurement.noise import MeasurementVector, add_gaussian_noise, channel_sigmas
from measurement.plan import (
    MeasurementKind,
    MeasurementPlan,
    default_plan,
    full_plan,
    plan_from_json,
    plan_to_json,
)
from measurement.prng import Xoshiro256StarStar, derive_seed
from measurement.quadratic import (
    QuadraticForm,
    QuadraticFormSet,
    build_measurement_matrices,
    evaluate_batch,
    evaluate_measurements,
    jacobian_at,
)
