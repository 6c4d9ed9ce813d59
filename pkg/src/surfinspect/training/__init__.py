from .loop import CURVE_HEADER, DivergenceError, EpochLog, fit, read_curve
from .optim import NonFiniteGradient, RMSProp, TrainConfig, decays, lr_at, rmsprop_step
