"""Service configuration: defaults < config file < environment < CLI flags."""

from __future__ import annotations

import json
import os
import secrets
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..gateway import GatewayConfig

DEFAULT_BIND_ADDR = "127.0.0.1"
DEFAULT_PORT = 8000
DEFAULT_DATA_DIR = "data"


@dataclass
class ServiceSettings:
    bind_addr: str = DEFAULT_BIND_ADDR
    port: int = DEFAULT_PORT
    data_dir: Path = Path(DEFAULT_DATA_DIR)
    auth_token: str = ""
    ingest_mode: str = "fixture"
    page_fixture_dir: Path = Path("fixture")
    video_url: str = ""
    gateway: GatewayConfig = field(default_factory=GatewayConfig)

    def __post_init__(self) -> None:
        if not self.auth_token:
            # No bootstrap credential configured; mint one for this run.
            self.auth_token = secrets.token_urlsafe(24)
            self.generated_token = True
        else:
            self.generated_token = False


def load_settings(
    config_path: Optional[Path] = None,
    *,
    environ: Optional[dict] = None,
    mock: bool = False,
    port: Optional[int] = None,
) -> ServiceSettings:
    env = dict(os.environ if environ is None else environ)

    file_values: dict = {}
    if config_path is not None:
        file_values = json.loads(Path(config_path).read_text(encoding="utf-8"))
        if not isinstance(file_values, dict):
            raise ValueError("config file must hold a JSON object")

    def pick(env_key: str, file_key: str, default):
        if env_key in env:
            return env[env_key]
        if file_key in file_values:
            return file_values[file_key]
        return default

    # Gateway env vars win over config-file values of the same name.
    gateway_env = dict(env)
    for key in ("LLM_MODE", "LLM_API_BASE", "LLM_API_KEY", "LLM_FIXTURE_DIR",
                "LLM_MODEL_CHAT", "LLM_MODEL_SECTION", "LLM_MODEL_SUGGEST",
                "LLM_MODEL_TRANSCRIBE"):
        if key not in gateway_env and key in file_values:
            gateway_env[key] = str(file_values[key])
    if mock:
        gateway_env["LLM_MODE"] = "mock"

    return ServiceSettings(
        bind_addr=str(pick("BIND_ADDR", "bind_addr", DEFAULT_BIND_ADDR)),
        port=int(port if port is not None else pick("PORT", "port", DEFAULT_PORT)),
        data_dir=Path(pick("DATA_DIR", "data_dir", DEFAULT_DATA_DIR)),
        auth_token=str(pick("AUTH_TOKEN", "auth_token", "")),
        ingest_mode=str(pick("INGEST_MODE", "ingest_mode", "fixture")),
        page_fixture_dir=Path(pick("PAGE_FIXTURE_DIR", "page_fixture_dir", "fixture")),
        video_url=str(pick("VIDEO_URL", "video_url", "")),
        gateway=GatewayConfig.from_env(gateway_env),
    )
