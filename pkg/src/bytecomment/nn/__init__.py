from .checkpoint import load_checkpoint, save_checkpoint
from .core import (
    Adam,
    LrSchedule,
    adam_step,
    add,
    check_finite,
    clip_grad_norm,
    dropout,
    grad_check,
    lstm_cell,
    masked_softmax,
    matmul,
    relative_error,
    sigmoid,
    tanh,
)
