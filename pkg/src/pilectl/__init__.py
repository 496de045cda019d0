"""pilectl: learning-from-demonstration controllers for bucket filling,
with from-scratch differentiable numerics and a desk-scale pile simulator."""

from .autodiff import ParamSet, Tensor
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .controllers import (ANNET, CHANNELS, DANNET, NNET, NNETV2,
                          ControllerParams, ControllerSpec, build_controller,
                          controller_loss, forward_graph, predict)
from .dataset import (D1, D2, DataError, Dataset, DatasetSpec, Demonstration,
                      build_dataset, decimate, filter_ideal, load_dataset,
                      load_demonstrations, save_dataset, single_action_fraction,
                      split)
from .functional import dropout, linear_forward, mse_loss, relu, softmax, tanh_op
from .optim import RAdam, finite_diff_grad, kaiming_init
from .simulator import (PROFILES, SUMMER, WINTER_ICE, WINTER_SNOW,
                        ConditionProfile, LoaderState, RolloutResult,
                        ScriptedExpert, generate_demonstrations,
                        policy_from_params, rollout, sense, step, success_rate)
from .training import LossCurve, TrainConfig, train, validate

__version__ = "0.1.0"
