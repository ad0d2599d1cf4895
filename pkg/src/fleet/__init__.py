# Fleet flexibility module
