"""LSTM approximator of the matched nonlinearity: regressors, network, training."""

from .excitation import generate_excitation
from .lstm import (LstmParams, backprop_bptt, batch_loss, dropout_masks, forward_sequence, lstm_forward,
                   mse_loss, sgd_step)
from .regressor import REGRESSOR_DIM, History, build_regressor, regressor_matrix
from .training import (Dataset, TrainConfig, TrainReport, WindowPredictor, approximation_error, make_dataset,
                       predict_windows, train)

__all__ = [
    "Dataset", "History", "LstmParams", "REGRESSOR_DIM", "TrainConfig", "TrainReport", "WindowPredictor",
    "approximation_error", "backprop_bptt", "batch_loss", "build_regressor", "dropout_masks",
    "forward_sequence", "generate_excitation", "lstm_forward", "make_dataset", "mse_loss",
    "predict_windows", "regressor_matrix", "sgd_step", "train",
]
