from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from .config import settings
from .log import configure_logging
from .routers import experiments

configure_logging(settings.LOG_LEVEL)

app = FastAPI(title="PbN Experiment API")

origins = ["*"]

app.add_middleware(
    CORSMiddleware,
    allow_origins=origins,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

###################### GET ROUTERS FOR API #####################
app.include_router(experiments.router)


@app.get("/")
def read_root():
    return {"response": "PbN Experiment API"}
