"""Array aliases and the pydantic field type used to carry numpy arrays."""

from typing import Annotated, Any

import numpy as np
from numpy.typing import NDArray
from pydantic import PlainSerializer, PlainValidator

Vector = NDArray[np.float64]
Matrix = NDArray[np.float64]


def _to_float_array(value: Any) -> np.ndarray:
    array = np.asarray(value, dtype=np.float64)
    if not np.all(np.isfinite(array)):
        raise ValueError("array entries must be finite")
    return array


# Lists on the way in, lists on the way out. Python floats serialize with the
# shortest round-trip repr, so JSON dumps keep full precision.
FloatArray = Annotated[
    np.ndarray,
    PlainValidator(_to_float_array),
    PlainSerializer(lambda array: np.asarray(array).tolist(), return_type=list),
]
