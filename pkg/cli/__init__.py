from .app import app

