# Mixed-integer model module
