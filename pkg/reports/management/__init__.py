# Management command files





