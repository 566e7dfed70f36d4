"""Optional HTTP wrapper around the CLI subcommands (needs the ``service`` extra).

    uvicorn n2super.service:app

POST /{command} with {"input": ..., "gens": 4, "order": ..., ...}; the response body is the
same JSON the CLI prints. Malformed input maps to 422, domain errors to 409.
"""

from __future__ import annotations

import argparse
from typing import Any

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .cli import COMMANDS, MAX_GENS, InputError, _validate
from .errors import SuperAlgebraError


class CommandRequest(BaseModel):
    input: Any = None
    gens: int = Field(4, ge=0, le=MAX_GENS)
    order: int | None = None
    weight: int | None = None
    window: int | None = None
    mode: str | None = None


app = FastAPI(title="n2super")


@app.get("/commands")
def list_commands() -> list[str]:
    return sorted(COMMANDS)


@app.post("/{command}")
def run_command(command: str, req: CommandRequest) -> Any:
    if command not in COMMANDS:
        raise HTTPException(404, detail={"error": "UnknownCommand", "detail": command})
    handler, needs_input = COMMANDS[command]
    args = argparse.Namespace(command=command, gens=req.gens, order=req.order, weight=req.weight,
                              window=req.window, mode=req.mode, infile=None, inline=None, outfile=None)
    try:
        _validate(args)
        if needs_input and req.input is None:
            raise InputError("this command needs an input")
        return handler(req.input, args)
    except SuperAlgebraError as exc:
        raise HTTPException(409, detail={"error": exc.name, "detail": str(exc)})
    except (InputError, ValueError, KeyError, TypeError, IndexError) as exc:
        raise HTTPException(422, detail={"error": "MalformedInput", "detail": str(exc)})
