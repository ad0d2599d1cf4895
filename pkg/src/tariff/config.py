"""
Loading of tariff and PDP configuration documents.
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

from pydantic import ValidationError

from .models import EventWindow, PdpPolicy, TariffSchedule
from ..utils.errors import ConfigError, config_error

logger = logging.getLogger(__name__)

BUNDLED_E19 = Path(__file__).resolve().parent.parent / "data" / "pge_e19.json"

Source = Union[str, Path, Dict[str, Any]]


def _read(source: Source) -> Dict[str, Any]:
    if isinstance(source, dict):
        return source
    path = Path(source)
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"Config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}")


def load_tariff(source: Source = BUNDLED_E19) -> TariffSchedule:
    """Parse a tariff document; a 'pdp' section, if present, is ignored here"""
    data = {k: v for k, v in _read(source).items() if k != "pdp"}
    try:
        tariff = TariffSchedule.model_validate(data)
    except ValidationError as e:
        raise config_error("tariff" if isinstance(source, dict) else f"tariff {source}", e)
    logger.debug(f"Loaded tariff {tariff.name}: {len(tariff.energy_periods)} energy periods, "
                 f"{len(tariff.demand_periods)} demand periods")
    return tariff


def load_pdp_policy(source: Source = BUNDLED_E19,
                    events: Optional[Sequence[EventWindow]] = None,
                    capacity_reserve: Optional[float] = None) -> PdpPolicy:
    """
    Parse a PDP policy, either a standalone document or the 'pdp' section
    of a tariff document. Explicit events and reserve override the file.

    With the bundled E-19 periods, default 14:00-18:00 events lie inside
    summer peak, so the part-peak credit stays zero unless an event window
    reaches into 08:30-12:00 or 18:00-21:30.
    """
    data = _read(source)
    data = dict(data.get("pdp", data))
    if events is not None:
        data["events"] = [e.model_dump(by_alias=True) if isinstance(e, EventWindow) else e
                          for e in events]
    if capacity_reserve is not None:
        data["capacity_reserve"] = capacity_reserve
    try:
        return PdpPolicy.model_validate(data)
    except ValidationError as e:
        raise config_error("pdp policy", e)
