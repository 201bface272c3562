from graalf.service.session import Session, SessionManager
from graalf.service.monitor import MonitorRegistry, MonitorSpec, Notification
from graalf.service.events import EventBus

__all__ = [
    "EventBus",
    "MonitorRegistry",
    "MonitorSpec",
    "Notification",
    "Session",
    "SessionManager",
]
