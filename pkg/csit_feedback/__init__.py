# csit_feedback 套件

__version__ = "1.0.0"
