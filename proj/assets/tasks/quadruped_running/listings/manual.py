def reward_function(robot_pos, robot_rot, robot_linvel, robot_angvel, actions):
    # velocity bonus for moving forward
    velocity_reward = 1.5*robot_linvel[:,0]

    # balance bonus
    balance_reward = torch.where(robot_pos[:,2] >=0.5, 1.0, 0.0)

    # deviation penalty on y-axis
    dev_penalty = 0.5*robot_pos[:,1]/2.0

    # rotation penalty
    rot_penalty = 0.1*robot_rot[:,1]

    final_reward = velocity_reward + balance_reward - dev_penalty - rot_penalty
    
