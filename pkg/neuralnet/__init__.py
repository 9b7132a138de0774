from neuralnet.accounting import param_count
from neuralnet.activations import activate, derivative
from neuralnet.checkpoint import load_checkpoint, save_checkpoint
from neuralnet.dispatch import backward, forward, grad, loss_and_grad, predict
from neuralnet.fnn import FnnParams, fnn_forward, fnn_param_count, init_fnn
from neuralnet.losses import huber_loss, loss_with_grad, mse_loss
from neuralnet.optim import AdamState, adam_step
from neuralnet.params import ParamSet
from neuralnet.proxlinear_net import (
    ProxLinearNetParams,
    init_proxlinear,
    init_proxlinear_random,
    proxlinear_forward,
    proxlinear_param_count,
)
from neuralnet.training import TrainConfig, train_estimator

