"""
MLP Loss Family

A tiny fully-connected regression network with smooth hidden activations and
a linear scalar output; l_i(w) = 1/2 (f_w(x_i) - y_i)^2.

Parameter layout (flattened w): layer by layer, first the weight matrix of
shape (out, in) in row-major order, then its bias of length out.
"""

from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from src.config import settings
from src.errors import FactorizationError, InvalidArgumentError
from src.logging_config import setup_logging
from src.loss_family.base import LossFamily, WeightsLike
from src.loss_family.specs import MlpFamilySpec, Provenance, Weights
from src.numerics.arrays import Matrix, Vector
from src.numerics.linalg import solve_spd
from src.numerics.rng import RngStream

logger = setup_logging(service_name="loss_family")

ARMIJO_C = 1e-4
MAX_STEP = 1e6
MIN_STEP = 1e-20
NEWTON_ITERS = 200
LINE_SEARCH_HALVINGS = 30

_INPUTS, _TARGET, _NOISE, _INIT = 0, 1, 2, 3


def _tanh_derivative(z: np.ndarray) -> np.ndarray:
    t = np.tanh(z)
    return 1.0 - t * t


ACTIVATIONS: dict[str, Tuple[Callable, Callable]] = {
    "tanh": (np.tanh, _tanh_derivative),
    "softplus": (lambda z: np.logaddexp(0.0, z), expit),
}


class MlpFamily(LossFamily):
    kind = "mlp"

    def __init__(
        self,
        layer_sizes: Sequence[int],
        inputs,
        targets,
        activation: str = "tanh",
        init_scale: float = 0.5,
        seed: int = 0,
        spec: Optional[MlpFamilySpec] = None,
    ):
        if activation not in ACTIVATIONS:
            raise InvalidArgumentError(f"unknown activation '{activation}'")
        if len(layer_sizes) < 2 or layer_sizes[-1] != 1:
            raise InvalidArgumentError(
                f"layer_sizes must end in a single output unit, got {list(layer_sizes)}"
            )
        inputs = np.asarray(inputs, dtype=np.float64)
        targets = np.asarray(targets, dtype=np.float64)
        if inputs.ndim != 2 or inputs.shape[1] != layer_sizes[0]:
            raise InvalidArgumentError(
                f"inputs must be (M, {layer_sizes[0]}), got {inputs.shape}"
            )
        if targets.shape != (inputs.shape[0],):
            raise InvalidArgumentError(
                f"targets must have shape ({inputs.shape[0]},), got {targets.shape}"
            )

        self.layer_sizes = list(layer_sizes)
        # (fan_in, fan_out, offset of W, offset of b) per layer
        self._layout: List[Tuple[int, int, int, int]] = []
        offset = 0
        for fan_in, fan_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            self._layout.append((fan_in, fan_out, offset, offset + fan_in * fan_out))
            offset += fan_in * fan_out + fan_out
        super().__init__(offset, inputs.shape[0])

        self.activation = activation
        self._act, self._act_prime = ACTIVATIONS[activation]
        self._inputs = inputs
        self._targets = targets
        self._init_scale = init_scale
        self._seed = seed
        self.spec = spec

    @classmethod
    def from_spec(cls, spec: MlpFamilySpec) -> "MlpFamily":
        """Target-network regression data: y = f_target(x) + noise."""
        root = RngStream(spec.seed)
        sizes = spec.layer_sizes
        inputs = spec.input_scale * root.substream(_INPUTS).generator().standard_normal(
            (spec.max_samples, sizes[0])
        )

        generator = root.substream(_TARGET).generator()
        target_params = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            weight = spec.target_scale * generator.standard_normal((fan_out, fan_in))
            target_params.append(weight.ravel() / np.sqrt(fan_in))
            target_params.append(0.1 * spec.target_scale * generator.standard_normal(fan_out))
        target = cls(sizes, inputs, np.zeros(spec.max_samples), spec.activation)
        clean = target.predict(np.concatenate(target_params), inputs)
        noise = spec.noise * root.substream(_NOISE).generator().standard_normal(spec.max_samples)

        family = cls(
            sizes, inputs, clean + noise, spec.activation, spec.init_scale, spec.seed, spec
        )
        logger.info(
            f"Built mlp family: layers={sizes}, N={family.dimension}, "
            f"M={spec.max_samples}, activation={spec.activation}"
        )
        return family

    # ========================================================================
    # Parameters
    # ========================================================================

    def unpack(self, w: Vector) -> List[Tuple[Matrix, Vector]]:
        """Views (W, b) per layer into a flat parameter vector."""
        layers = []
        for fan_in, fan_out, w_off, b_off in self._layout:
            weight = w[w_off:b_off].reshape(fan_out, fan_in)
            layers.append((weight, w[b_off : b_off + fan_out]))
        return layers

    def pack(self, layers: Sequence[Tuple[Matrix, Vector]]) -> Vector:
        parts = []
        for weight, bias in layers:
            parts.append(np.asarray(weight, dtype=np.float64).ravel())
            parts.append(np.asarray(bias, dtype=np.float64))
        return np.concatenate(parts)

    def initial_weights(self) -> Weights:
        generator = RngStream(self._seed).substream(_INIT).generator()
        layers = []
        for fan_in, fan_out, _, _ in self._layout:
            weight = self._init_scale * generator.standard_normal((fan_out, fan_in))
            layers.append((weight / np.sqrt(fan_in), np.zeros(fan_out)))
        return Weights(self.pack(layers))

    # ========================================================================
    # Forward / backward
    # ========================================================================

    def predict(self, w: Vector, inputs: Matrix) -> Vector:
        outputs, _ = self._forward(w, inputs)
        return outputs

    def _forward(self, w: Vector, inputs: Matrix):
        layers = self.unpack(w)
        activations = [inputs]
        pre_activations = []
        hidden = inputs
        for weight, bias in layers[:-1]:
            z = hidden @ weight.T + bias
            pre_activations.append(z)
            hidden = self._act(z)
            activations.append(hidden)
        weight, bias = layers[-1]
        outputs = (hidden @ weight.T + bias)[:, 0]
        return outputs, (layers, activations, pre_activations)

    def _batch_predict(self, points: Matrix, inputs: Matrix) -> Matrix:
        """(S, n) outputs for S parameter vectors on n inputs."""
        count = points.shape[0]
        hidden = np.broadcast_to(inputs, (count,) + inputs.shape)
        for index, (fan_in, fan_out, w_off, b_off) in enumerate(self._layout):
            weights = points[:, w_off:b_off].reshape(count, fan_out, fan_in)
            biases = points[:, b_off : b_off + fan_out]
            z = np.einsum("sni,soi->sno", hidden, weights) + biases[:, None, :]
            hidden = z if index == len(self._layout) - 1 else self._act(z)
        return hidden[:, :, 0]

    def _losses(self, w: Vector, stop: int) -> Vector:
        residuals = self.predict(w, self._inputs[:stop]) - self._targets[:stop]
        return 0.5 * residuals * residuals

    def _batch_losses(self, points: Matrix, stop: int) -> Matrix:
        residuals = self._batch_predict(points, self._inputs[:stop]) - self._targets[:stop]
        return 0.5 * residuals * residuals

    def _gradient(self, w: Vector, start: int, stop: int) -> Vector:
        inputs = self._inputs[start:stop]
        outputs, (layers, activations, pre_activations) = self._forward(w, inputs)
        # d(mean loss)/d(output) per sample
        delta = ((outputs - self._targets[start:stop]) / (stop - start))[:, None]

        grads: List[Tuple[Matrix, Vector]] = []
        for index in range(len(layers) - 1, -1, -1):
            weight, _ = layers[index]
            grads.append((delta.T @ activations[index], delta.sum(axis=0)))
            if index > 0:
                delta = (delta @ weight) * self._act_prime(pre_activations[index - 1])
        return self.pack(grads[::-1])

    def _hvp(self, w: Vector, v: Vector, start: int, stop: int) -> Vector:
        """Central difference of analytic gradients along v."""
        h = np.sqrt(np.finfo(np.float64).eps) * (1.0 + np.linalg.norm(w)) / np.linalg.norm(v)
        forward = self._gradient(w + h * v, start, stop)
        backward = self._gradient(w - h * v, start, stop)
        return (forward - backward) / (2.0 * h)

    # ========================================================================
    # Minimizer
    # ========================================================================

    def minimize(
        self,
        k: int,
        init: Optional[WeightsLike] = None,
        tol: Optional[float] = None,
        max_iters: Optional[int] = None,
    ) -> Weights:
        """
        Minimize L_k by Armijo gradient descent, then a damped Newton polish.

        The polish runs only when N <= MAX_DENSE_DIM (it needs the dense
        Hessian). On failure the best iterate seen is returned with
        `converged=False`; this is logged, not raised.
        """
        self.check_count(k)
        tol, max_iters = self._minimizer_defaults(tol, max_iters)
        w = self.point(init if init is not None else self.initial_weights())

        w, iterations = self._gradient_descent(k, w, tol, max_iters)
        grad_norm = float(np.linalg.norm(self._gradient(w, 0, k)))
        if grad_norm > tol and self.dimension <= settings.MAX_DENSE_DIM:
            w, newton_steps = self._newton_polish(k, w, tol)
            iterations += newton_steps
            grad_norm = float(np.linalg.norm(self._gradient(w, 0, k)))

        converged = grad_norm <= tol
        if not converged:
            logger.warning(
                f"MLP minimizer for k={k} stopped at ||g||={grad_norm:.3e} > tol={tol:.1e} "
                f"after {iterations} iterations"
            )
        else:
            logger.debug(f"MLP minimizer for k={k}: ||g||={grad_norm:.3e} in {iterations} iterations")
        return Weights(
            w,
            Provenance(
                kind="minimizer",
                k=k,
                grad_norm=grad_norm,
                converged=converged,
                iterations=iterations,
            ),
        )

    def _risk(self, k: int, w: Vector) -> float:
        return float(np.mean(self._losses(w, k)))

    def _gradient_descent(self, k: int, w: Vector, tol: float, max_iters: int):
        loss = self._risk(k, w)
        grad = self._gradient(w, 0, k)
        step = 1.0
        iterations = 0
        while iterations < max_iters:
            grad_sq = float(grad @ grad)
            if np.sqrt(grad_sq) <= tol:
                break
            step = min(2.0 * step, MAX_STEP)
            while True:
                candidate = w - step * grad
                candidate_loss = self._risk(k, candidate)
                if candidate_loss <= loss - ARMIJO_C * step * grad_sq:
                    break
                step *= 0.5
                if step < MIN_STEP:
                    # line search stalled at rounding level
                    return w, iterations
            w, loss = candidate, candidate_loss
            grad = self._gradient(w, 0, k)
            iterations += 1
        return w, iterations

    def _newton_polish(self, k: int, w: Vector, tol: float):
        """Damped Newton on the dense Hessian; damping grows when a step fails."""
        grad = self._gradient(w, 0, k)
        norm = float(np.linalg.norm(grad))
        loss = self._risk(k, w)
        best_w, best_norm = w, norm
        hessian, scale, mu = None, 1.0, 0.0
        steps = 0
        while steps < NEWTON_ITERS and norm > tol:
            steps += 1
            if hessian is None:
                hessian = self.dense_hessian_oracle(k, w)
                scale = 1.0 + float(np.linalg.norm(hessian))
            direction, mu = _damped_newton_direction(hessian, grad, mu, scale)
            candidate = self._line_search(k, w, loss, grad, direction)
            if candidate is None:
                mu = max(10.0 * mu, 1e-10 * scale)
                continue

            w, hessian = candidate, None
            loss = self._risk(k, w)
            grad = self._gradient(w, 0, k)
            norm = float(np.linalg.norm(grad))
            mu /= 10.0
            if norm < best_norm:
                best_w, best_norm = w, norm
        return best_w, steps

    def _line_search(self, k, w, loss, grad, direction) -> Optional[Vector]:
        slope = float(grad @ direction)
        t = 1.0
        for _ in range(LINE_SEARCH_HALVINGS):
            candidate = w + t * direction
            if self._risk(k, candidate) <= loss + ARMIJO_C * t * slope:
                return candidate
            t *= 0.5
        # loss changes below rounding: accept the full step if it shrinks the gradient
        candidate = w + direction
        if np.linalg.norm(self._gradient(candidate, 0, k)) < np.linalg.norm(grad):
            return candidate
        return None


def _damped_newton_direction(hessian: Matrix, grad: Vector, mu: float, scale: float):
    """Solve (H + mu I) p = -g, raising mu until H + mu I is PD."""
    identity = np.eye(hessian.shape[0])
    while True:
        try:
            return solve_spd(hessian + mu * identity, -grad), mu
        except FactorizationError:
            mu = max(10.0 * mu, 1e-10 * scale)
