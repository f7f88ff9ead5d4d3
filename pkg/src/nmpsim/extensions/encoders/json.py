import enum
import json
from dataclasses import asdict, is_dataclass
from typing import Any

import numpy as np


class EnhancedJsonEncoder(json.JSONEncoder):
    """
    Custom json Encoder to properly handle numpy values, enums and dataclasses
    """

    def default(self, o: Any) -> Any:
        if isinstance(o, np.integer):
            return int(o)

        if isinstance(o, np.floating):
            return float(o)

        if isinstance(o, np.ndarray):
            return o.tolist()

        if isinstance(o, enum.Enum):
            return o.value

        if is_dataclass(o):
            return asdict(o)  # type: ignore

        return super(EnhancedJsonEncoder, self).default(o)
