"""Step-by-step layered graphic design engine.

Designs are built one instruction at a time. Each step adds an image layer
(masked and blended so untouched pixels survive byte-exactly) and/or text
elements that stay editable metadata forever, rendered deterministically at
flatten time. The package ships a mock generator, so every pipeline runs
offline; remote generator/refiner/judge services plug in over HTTP.
"""

__version__ = "0.1.0"

from .canvas import BBox, Canvas, new_canvas
from .compositor import Mask
from .document import DesignDocument, Session, StepRecord, flatten, new_session
from .engine import Engine, StepOutcome
from .errors import SledgeError
from .metadata import ElementMetadata, GeneratorReply, parse_reply, serialize_reply

__all__ = [
    "__version__",
    "BBox",
    "Canvas",
    "new_canvas",
    "Mask",
    "DesignDocument",
    "Session",
    "StepRecord",
    "flatten",
    "new_session",
    "Engine",
    "StepOutcome",
    "SledgeError",
    "ElementMetadata",
    "GeneratorReply",
    "parse_reply",
    "serialize_reply",
]
