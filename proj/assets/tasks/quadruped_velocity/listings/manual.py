def reward_function (robot_pos , robot_rot , robot_linvel, robot_angvel , actions ) :

    speed_dev = torch.normtorch.norm(robot_linvel[:,0:2] - target_seppd[:,0:2], p=2, dim=-1)
    
    velocity_reward = 2.0* 1.0/(1.0+speed_dev)
    
    balance_reward = 1.0*torch.where(robot_pos[:,2] >= 0.05, 1.0, 0.0)
    
    rot_penalty = 0.1*robot_rot[:,1]
    
    final_reward = velocity_reward + balance_reward - rot_penalty
    
    return final_reward

