"""Hybrid BiLSTM/CNN stacking ensemble with hand-written gradients."""
from .checkpoint import load_checkpoint, save_checkpoint
from .config import ConvSpec, LossWeights, ModelConfig, TrainConfig
from .gradcheck import GradCheckReport, grad_check, grad_check_dense
from .layers import (
    conv1d_same_backward,
    conv1d_same_forward,
    dense_backward,
    dense_forward,
    maxpool1d_backward,
    maxpool1d_forward,
)
from .lstm import bilstm_forward, bilstm_forward_batch
from .model import Intermediates, forward_batch, loss_and_grad, loss_terms, model_forward, predict
from .optim import AdamState, adam_step
from .params import ModelParams, init_params, param_count, param_shapes, zero_params
from .training import HISTORY_COLUMNS, Split, TrainResult, train

loss = loss_terms

__all__ = [
    "AdamState", "ConvSpec", "GradCheckReport", "HISTORY_COLUMNS", "Intermediates", "LossWeights",
    "ModelConfig", "ModelParams", "Split", "TrainConfig", "TrainResult", "adam_step", "bilstm_forward",
    "bilstm_forward_batch", "conv1d_same_backward", "conv1d_same_forward", "dense_backward", "dense_forward",
    "forward_batch", "grad_check", "grad_check_dense", "init_params", "load_checkpoint", "loss", "loss_and_grad",
    "loss_terms", "maxpool1d_backward", "maxpool1d_forward", "model_forward", "param_count", "param_shapes",
    "predict", "save_checkpoint", "train", "zero_params",
]
