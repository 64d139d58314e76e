"""Recurrent forecasters implemented directly on numpy arrays."""

from .cells import (
    LstmCellParams,
    RnnCellParams,
    dense_forward,
    dropout_forward,
    lstm_forward,
    rnn_forward,
)
from .network import (
    AdamState,
    NetSpec,
    TrainConfig,
    adam_step,
    init_params,
    load_params,
    network_forward,
    predict_series,
    save_params,
    train,
)

__all__ = [
    "AdamState",
    "LstmCellParams",
    "NetSpec",
    "RnnCellParams",
    "TrainConfig",
    "adam_step",
    "dense_forward",
    "dropout_forward",
    "init_params",
    "load_params",
    "lstm_forward",
    "network_forward",
    "predict_series",
    "rnn_forward",
    "save_params",
    "train",
]
