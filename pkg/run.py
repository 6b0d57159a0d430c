#!/usr/bin/env python3
"""Run the strata HTTP API."""

import uvicorn

if __name__ == "__main__":
    uvicorn.run(
        "strata.main:app",
        host="0.0.0.0",
        port=8000,
        reload=True,
    )
